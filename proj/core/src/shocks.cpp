#include "fuel/shocks.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fuel/errors.hpp"
#include "fuel/parallel.hpp"

namespace fuel {

namespace {

void require_finite(double x, const char* field) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(field) + " must be finite");
}

}  // namespace

void validate(const ShockModel& model) {
    if (const auto* gbm = std::get_if<GeometricBrownian>(&model)) {
        require_finite(gbm->x0, "shock.x0");
        require_finite(gbm->mu, "shock.mu");
        require_finite(gbm->sigma, "shock.sigma");
        if (!(gbm->x0 > 0.0)) throw std::invalid_argument("shock.x0 must be > 0");
        if (gbm->sigma < 0.0) throw std::invalid_argument("shock.sigma must be >= 0");
    } else {
        require_finite(std::get<ArithmeticBrownian>(model).w0, "shock.w0");
    }
}

void validate(const FuelModel& model) {
    if (const auto* c = std::get_if<ConstantFuel>(&model)) {
        require_finite(c->theta0, "fuel.theta0");
        if (!(c->theta0 > 0.0)) throw std::invalid_argument("fuel.theta0 must be > 0");
    } else if (const auto* a = std::get_if<AffineFuel>(&model)) {
        require_finite(a->theta0, "fuel.theta0");
        require_finite(a->rate, "fuel.rate");
        if (!(a->theta0 > 0.0)) throw std::invalid_argument("fuel.theta0 must be > 0");
        if (a->rate < 0.0) throw std::invalid_argument("fuel.rate must be >= 0");
    } else {
        const auto& r = std::get<RunningMaxFuel>(model);
        require_finite(r.theta0, "fuel.theta0");
        require_finite(r.mu, "fuel.mu");
        require_finite(r.sigma, "fuel.sigma");
        if (!(r.theta0 > 0.0)) throw std::invalid_argument("fuel.theta0 must be > 0");
        if (r.sigma < 0.0) throw std::invalid_argument("fuel.sigma must be >= 0");
    }
}

double fuel_initial(const FuelModel& model) {
    return std::visit([](const auto& m) { return m.theta0; }, model);
}

bool fuel_is_deterministic(const FuelModel& model) {
    return !std::holds_alternative<RunningMaxFuel>(model);
}

double fuel_at(const FuelModel& model, double t) {
    if (const auto* c = std::get_if<ConstantFuel>(&model)) return c->theta0;
    if (const auto* a = std::get_if<AffineFuel>(&model)) return a->theta0 + a->rate * t;
    throw unsupported_model("fuel_at: stochastic fuel has no deterministic trajectory");
}

void generate_shock_path(const ShockModel& model, const TimeGrid& grid, std::uint64_t seed,
                         std::size_t path, double* out, std::uint64_t stream) {
    NormalStream z(seed, stream, path);
    double dt = grid.dt();
    double sqrt_dt = std::sqrt(dt);
    if (const auto* gbm = std::get_if<GeometricBrownian>(&model)) {
        double drift = (gbm->mu - 0.5 * gbm->sigma * gbm->sigma) * dt;
        double diffusion = gbm->sigma * sqrt_dt;
        double x = gbm->x0;
        out[0] = x;
        for (int k = 0; k < grid.n_steps; ++k) {
            x *= std::exp(drift + diffusion * z.next());
            out[k + 1] = x;
        }
    } else {
        double w = std::get<ArithmeticBrownian>(model).w0;
        out[0] = w;
        for (int k = 0; k < grid.n_steps; ++k) {
            w += sqrt_dt * z.next();
            out[k + 1] = w;
        }
    }
}

namespace {

// Maximum of a Brownian bridge over one cell given its endpoints and the
// variance var = vol^2 * dt, sampled by inversion from a uniform draw.
inline double bridge_max(double a, double b, double var, double u) {
    if (var <= 0.0) return a > b ? a : b;
    double d = b - a;
    return 0.5 * (a + b + std::sqrt(d * d - 2.0 * var * std::log(u)));
}

}  // namespace

void generate_cell_maxima(const ShockModel& model, const TimeGrid& grid, std::uint64_t seed,
                          std::size_t path, const double* nodes, double* out, std::uint64_t stream) {
    UniformStream u(seed, stream, path);
    double dt = grid.dt();
    if (const auto* gbm = std::get_if<GeometricBrownian>(&model)) {
        double var = gbm->sigma * gbm->sigma * dt;
        if (var <= 0.0) {
            for (int k = 0; k < grid.n_steps; ++k) out[k] = nodes[k] > nodes[k + 1] ? nodes[k] : nodes[k + 1];
            return;
        }
        // geometric paths: the bridge acts on the log.  The clamp keeps the
        // sampled supremum at or above both endpoints after rounding through
        // exp; running-sup constructions downstream rely on that ordering.
        double la = std::log(nodes[0]);
        for (int k = 0; k < grid.n_steps; ++k) {
            double lb = std::log(nodes[k + 1]);
            double hi = nodes[k] > nodes[k + 1] ? nodes[k] : nodes[k + 1];
            double m = std::exp(bridge_max(la, lb, var, u.next()));
            out[k] = m > hi ? m : hi;
            la = lb;
        }
    } else {
        for (int k = 0; k < grid.n_steps; ++k) {
            double hi = nodes[k] > nodes[k + 1] ? nodes[k] : nodes[k + 1];
            double m = bridge_max(nodes[k], nodes[k + 1], dt, u.next());
            out[k] = m > hi ? m : hi;
        }
    }
}

PathEnsemble simulate_shock(const ShockModel& model, const TimeGrid& grid, std::size_t n_paths,
                            std::uint64_t seed) {
    validate(model);
    PathEnsemble e;
    e.grid = grid;
    e.n_paths = n_paths;
    e.master_seed = seed;
    e.values.resize(n_paths * static_cast<std::size_t>(grid.n_nodes()));
    parallel_for(n_paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) generate_shock_path(model, grid, seed, p, e.row(p));
    });
    return e;
}

PathEnsemble simulate_fuel(const FuelModel& model, const TimeGrid& grid, std::size_t n_paths,
                           std::uint64_t seed) {
    validate(model);
    PathEnsemble e;
    e.grid = grid;
    e.n_paths = n_paths;
    e.master_seed = seed;
    e.values.resize(n_paths * static_cast<std::size_t>(grid.n_nodes()));
    if (const auto* c = std::get_if<ConstantFuel>(&model)) {
        for (auto& v : e.values) v = c->theta0;
        return e;
    }
    if (const auto* a = std::get_if<AffineFuel>(&model)) {
        parallel_for(n_paths, [&](std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                double* row = e.row(p);
                for (int k = 0; k < grid.n_nodes(); ++k) row[k] = a->theta0 + a->rate * grid.node(k);
            }
        });
        return e;
    }
    const auto& r = std::get<RunningMaxFuel>(model);
    GeometricBrownian signal{r.theta0, r.mu, r.sigma};
    parallel_for(n_paths, [&](std::size_t begin, std::size_t end) {
        std::vector<double> xi(static_cast<std::size_t>(grid.n_nodes()));
        for (std::size_t p = begin; p < end; ++p) {
            generate_shock_path(ShockModel{signal}, grid, seed, p, xi.data(), rng::fuel_nodes);
            double* row = e.row(p);
            // node k sees the signal only strictly before t_k
            double m = r.theta0;
            row[0] = m;
            for (int k = 1; k < grid.n_nodes(); ++k) {
                if (xi[static_cast<std::size_t>(k - 1)] > m) m = xi[static_cast<std::size_t>(k - 1)];
                row[k] = m;
            }
        }
    });
    return e;
}

}  // namespace fuel
