#include "fuel/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fuel {

TimeGrid make_grid(double t_max, int n_steps) {
    if (!(t_max > 0.0) || !std::isfinite(t_max))
        throw std::invalid_argument("make_grid: t_max must be a positive finite real, got " +
                                    std::to_string(t_max));
    if (n_steps < 1)
        throw std::invalid_argument("make_grid: n_steps must be >= 1, got " + std::to_string(n_steps));
    TimeGrid g;
    g.t_max = t_max;
    g.n_steps = n_steps;
    g.nodes.resize(static_cast<std::size_t>(n_steps) + 1);
    double dt = t_max / n_steps;
    for (int k = 0; k <= n_steps; ++k) g.nodes[static_cast<std::size_t>(k)] = k * dt;
    // pin the endpoint so node(n_steps) == t_max exactly
    g.nodes.back() = t_max;
    return g;
}

std::vector<double> discount_cell_masses(const TimeGrid& grid, double delta) {
    std::vector<double> w(static_cast<std::size_t>(grid.n_steps));
    if (delta == 0.0) {
        for (auto& x : w) x = grid.dt();
        return w;
    }
    double prev = 1.0;
    for (int k = 0; k < grid.n_steps; ++k) {
        double next = std::exp(-delta * grid.node(k + 1));
        w[static_cast<std::size_t>(k)] = (prev - next) / delta;
        prev = next;
    }
    return w;
}

}  // namespace fuel
