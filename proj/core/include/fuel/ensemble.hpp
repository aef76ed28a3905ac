#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fuel/grid.hpp"

namespace fuel {

/// A matrix of simulated paths: n_paths rows, one column per grid node.
/// Regenerable bit-identically from (model, grid, n_paths, master_seed).
struct PathEnsemble {
    TimeGrid grid;
    std::size_t n_paths = 0;
    std::uint64_t master_seed = 0;
    std::vector<double> values;  // row-major, n_paths x (n_steps + 1)

    double at(std::size_t path, int node) const {
        return values[path * static_cast<std::size_t>(grid.n_nodes()) + static_cast<std::size_t>(node)];
    }
    double* row(std::size_t path) { return values.data() + path * static_cast<std::size_t>(grid.n_nodes()); }
    const double* row(std::size_t path) const {
        return values.data() + path * static_cast<std::size_t>(grid.n_nodes());
    }

    /// All paths identically equal to `value` (degenerate cases in tests and
    /// deterministic scenarios).
    static PathEnsemble constant(const TimeGrid& grid, std::size_t n_paths, double value);
};

/// Writes one row per path under a header row of node times.  All numbers are
/// printed with 17 significant digits so a read-back reproduces every double.
void write_csv(const PathEnsemble& paths, std::ostream& out);
void write_csv(const PathEnsemble& paths, const std::string& file);

}  // namespace fuel
