#include "fuel/ensemble.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace fuel {

PathEnsemble PathEnsemble::constant(const TimeGrid& grid, std::size_t n_paths, double value) {
    PathEnsemble e;
    e.grid = grid;
    e.n_paths = n_paths;
    e.values.assign(n_paths * static_cast<std::size_t>(grid.n_nodes()), value);
    return e;
}

namespace {

void append_number(std::string& line, double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    line += buf;
}

}  // namespace

void write_csv(const PathEnsemble& paths, std::ostream& out) {
    std::string line;
    for (int k = 0; k < paths.grid.n_nodes(); ++k) {
        if (k > 0) line += ',';
        append_number(line, paths.grid.node(k));
    }
    line += '\n';
    out << line;
    for (std::size_t p = 0; p < paths.n_paths; ++p) {
        line.clear();
        const double* row = paths.row(p);
        for (int k = 0; k < paths.grid.n_nodes(); ++k) {
            if (k > 0) line += ',';
            append_number(line, row[k]);
        }
        line += '\n';
        out << line;
    }
}

void write_csv(const PathEnsemble& paths, const std::string& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("write_csv: cannot open " + file);
    write_csv(paths, out);
}

}  // namespace fuel
