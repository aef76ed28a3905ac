#pragma once

#include <vector>

namespace fuel {

/// Uniform time grid on [0, t_max] with n_steps cells and n_steps+1 nodes.
struct TimeGrid {
    double t_max = 0.0;
    int n_steps = 0;
    std::vector<double> nodes;  // nodes[k] = k * dt, nodes[0] == 0

    double dt() const { return t_max / n_steps; }
    int n_nodes() const { return n_steps + 1; }
    double node(int k) const { return nodes[static_cast<std::size_t>(k)]; }
};

/// Builds a uniform grid.  Requires t_max > 0 and n_steps >= 1.
TimeGrid make_grid(double t_max, int n_steps);

/// Exact discount mass of cell k: integral of e^{-delta s} over [t_k, t_{k+1}].
/// Each entry is bounded by e^{-delta t_k} * dt.
std::vector<double> discount_cell_masses(const TimeGrid& grid, double delta);

}  // namespace fuel
