#pragma once

#include <cstdint>
#include <variant>

#include "fuel/ensemble.hpp"
#include "fuel/grid.hpp"
#include "fuel/rng.hpp"

namespace fuel {

/// dX = mu X dt + sigma X dW, X(0) = x0 > 0.  Node values are exact in
/// distribution: X_{k+1} = X_k exp((mu - sigma^2/2) dt + sigma sqrt(dt) Z).
struct GeometricBrownian {
    double x0 = 1.0;
    double mu = 0.0;
    double sigma = 0.0;
};

/// Standard Brownian motion started at w0 (unit volatility, no drift).
struct ArithmeticBrownian {
    double w0 = 0.0;
};

using ShockModel = std::variant<GeometricBrownian, ArithmeticBrownian>;

/// theta(t) = theta0.
struct ConstantFuel {
    double theta0 = 1.0;
};

/// theta(t) = theta0 + rate * t, rate >= 0.
struct AffineFuel {
    double theta0 = 1.0;
    double rate = 0.0;
};

/// theta(t) = theta0 v sup_{s < t} xi(s) for an independent geometric
/// Brownian signal xi with xi(0) = theta0.  The supremum over [0, t) is
/// realized on the grid with nodes strictly before t, so theta stays
/// left-continuous and theta(0) = theta0 exactly.
struct RunningMaxFuel {
    double theta0 = 1.0;
    double mu = 0.0;
    double sigma = 0.0;
};

using FuelModel = std::variant<ConstantFuel, AffineFuel, RunningMaxFuel>;

void validate(const ShockModel& model);
void validate(const FuelModel& model);

double fuel_initial(const FuelModel& model);
bool fuel_is_deterministic(const FuelModel& model);
/// Value of a deterministic fuel process at time t; throws unsupported_model
/// for stochastic fuel.
double fuel_at(const FuelModel& model, double t);

/// Fills out[0..n_steps] with one path of the shock at the grid nodes.
/// Identical to row `path` of simulate_shock with the same seed.
void generate_shock_path(const ShockModel& model, const TimeGrid& grid, std::uint64_t seed,
                         std::size_t path, double* out, std::uint64_t stream = rng::shock_nodes);

/// Fills out[0..n_steps-1] with the within-cell maxima of the continuous
/// path through the given node values, sampled from the bridge law cell by
/// cell (log-space bridge for geometric shocks).  Used by estimators whose
/// target is a continuous-time supremum; plain node suprema undershoot it by
/// O(sqrt(dt)) per cell, which the bridge removes.
void generate_cell_maxima(const ShockModel& model, const TimeGrid& grid, std::uint64_t seed,
                          std::size_t path, const double* nodes, double* out,
                          std::uint64_t stream = rng::bridge_cells);

/// n_paths rows of the shock at the grid nodes; paths are independent
/// counter-based streams of (seed, path index), so the result is the same for
/// every thread count.
PathEnsemble simulate_shock(const ShockModel& model, const TimeGrid& grid, std::size_t n_paths,
                            std::uint64_t seed);

/// Fuel paths theta(t_k).  All variants are nondecreasing in k path by path
/// and start at theta0 exactly.  The stochastic variant draws from a stream
/// disjoint from the shock stream, so shock and fuel are independent even
/// under a shared master seed.
PathEnsemble simulate_fuel(const FuelModel& model, const TimeGrid& grid, std::size_t n_paths,
                           std::uint64_t seed);

}  // namespace fuel
