#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "fuel/grid.hpp"

namespace fuel {

/// A Monte Carlo point estimate.  tail_bound is an analytic bound on the
/// truncation error of the underlying time integral (0 when exact).
struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    double tail_bound = 0.0;
};

/// Sample mean and standard error of per-path values.  Always reduces
/// sequentially in index order, so the result is thread-count independent.
inline Estimate reduce_estimate(const std::vector<double>& per_path, double tail_bound = 0.0) {
    Estimate e;
    e.n_paths = per_path.size();
    e.tail_bound = tail_bound;
    if (per_path.empty()) return e;
    double sum = 0.0;
    for (double v : per_path) sum += v;
    e.mean = sum / static_cast<double>(per_path.size());
    if (per_path.size() > 1) {
        double ss = 0.0;
        for (double v : per_path) {
            double d = v - e.mean;
            ss += d * d;
        }
        double n = static_cast<double>(per_path.size());
        e.std_error = std::sqrt(ss / (n * (n - 1.0)));
    }
    return e;
}

/// Budget of an ensemble-generating Monte Carlo operation.
struct McParams {
    std::size_t n_paths = 4096;
    TimeGrid grid;
    std::uint64_t seed = 0;
};

}  // namespace fuel
