#include "fuel/base_capacity.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fuel/errors.hpp"
#include "fuel/parallel.hpp"

namespace fuel {

void validate(const BaseCapacitySpec& spec) {
    if (const auto* s = std::get_if<ScaledShock>(&spec)) {
        if (!(s->k > 0.0) || !std::isfinite(s->k))
            throw std::invalid_argument("base_capacity.k must be > 0");
    } else {
        const auto& b = std::get<ShiftedBrownian>(spec);
        if (!(b.c > 0.0) || !std::isfinite(b.c))
            throw std::invalid_argument("base_capacity.c must be > 0");
    }
}

double negative_root(double b, double sigma, double delta) {
    if (!(sigma > 0.0)) throw std::invalid_argument("negative_root: sigma must be > 0");
    if (!(delta > 0.0)) throw std::invalid_argument("negative_root: delta must be > 0");
    double s2 = sigma * sigma;
    double disc = std::sqrt(b * b + 2.0 * s2 * delta);
    double root;
    if (b > 0.0) {
        // -b - disc: both terms negative, no cancellation
        root = (-b - disc) / s2;
    } else {
        // compute the positive root first, recover the negative one from the
        // product of roots -2 delta / sigma^2
        double pos = (-b + disc) / s2;
        root = -2.0 * delta / (s2 * pos);
    }
    double residual = 0.5 * s2 * root * root + b * root - delta;
    if (!(std::fabs(residual) <= 1e-12 * std::fmax(1.0, delta)))
        throw std::runtime_error("negative_root: residual " + std::to_string(residual) +
                                 " exceeds tolerance");
    return root;
}

double cobb_douglas_k(double alpha, double b, double sigma, double delta) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("cobb_douglas_k: alpha must lie in (0, 1)");
    double gamma = negative_root(b, sigma, delta);
    double k = std::pow(gamma / (delta * (gamma - alpha)), 1.0 / alpha);
    // marginal profit along the base capacity: R_y(X, kX) = k^{-alpha}; the
    // root structure guarantees it strictly exceeds delta
    if (!(std::pow(k, -alpha) > delta))
        throw std::runtime_error("cobb_douglas_k: postcondition k^(-alpha) > delta failed");
    return k;
}

Estimate quadratic_offset_c(double delta, const McParams& mc) {
    validate(Discount{delta});
    const TimeGrid& grid = mc.grid;
    if (grid.n_nodes() < 2) throw std::invalid_argument("quadratic_offset_c: grid is empty");
    double tail_weight = std::exp(-delta * grid.t_max);
    if (!(tail_weight < 1e-6))
        throw tail_bound_error("quadratic_offset_c: e^{-delta t_max} = " + std::to_string(tail_weight) +
                               " >= 1e-6; extend t_max");
    std::vector<double> masses = discount_cell_masses(grid, delta);
    // the target integrand carries delta e^{-delta s}
    for (auto& m : masses) m *= delta;

    ShockModel w{ArithmeticBrownian{0.0}};
    std::vector<double> per_path(mc.n_paths);
    parallel_for(mc.n_paths, [&](std::size_t begin, std::size_t end) {
        std::vector<double> nodes(static_cast<std::size_t>(grid.n_nodes()));
        std::vector<double> cellmax(static_cast<std::size_t>(grid.n_steps));
        for (std::size_t p = begin; p < end; ++p) {
            generate_shock_path(w, grid, mc.seed, p, nodes.data());
            generate_cell_maxima(w, grid, mc.seed, p, nodes.data(), cellmax.data());
            // running supremum over [0, t_k]; the sup over [0, s) for s inside
            // cell k lies between m[k] and m[k+1], integrate the trapezoid
            double acc = 0.0;
            double m_left = 0.0;  // sup over [0, 0] = W(0) = 0
            for (int k = 0; k < grid.n_steps; ++k) {
                double m_right = m_left > cellmax[static_cast<std::size_t>(k)]
                                     ? m_left
                                     : cellmax[static_cast<std::size_t>(k)];
                acc += masses[static_cast<std::size_t>(k)] * 0.5 * (m_left + m_right);
                m_left = m_right;
            }
            // frozen-supremum tail: integral_{t_max}^inf delta e^{-delta s} m ds
            acc += tail_weight * m_left;
            per_path[p] = acc;
        }
    });
    // the frozen tail undershoots the true supremum by at most the mean
    // further growth E[(M_inf - M_tmax)^+ e^{-delta t_max}]-ish; report the
    // magnitude of the whole frozen term as the truncation bound
    double tail_bound = tail_weight * (std::sqrt(2.0 * grid.t_max / 3.14159265358979323846) + 1.0 / std::sqrt(2.0 * delta));
    return reduce_estimate(per_path, tail_bound);
}

PathEnsemble base_capacity_paths(const BaseCapacitySpec& spec, const PathEnsemble& shock) {
    validate(spec);
    PathEnsemble l = shock;
    if (const auto* s = std::get_if<ScaledShock>(&spec)) {
        for (auto& v : l.values) v *= s->k;
    } else {
        double c = std::get<ShiftedBrownian>(spec).c;
        for (auto& v : l.values) v -= c;
    }
    return l;
}

namespace {

int node_index_of(const TimeGrid& grid, double t, const char* who) {
    double pos = t / grid.dt();
    int idx = static_cast<int>(std::lround(pos));
    if (idx < 0 || idx > grid.n_steps || std::fabs(pos - idx) > 1e-9)
        throw std::invalid_argument(std::string(who) + ": time " + std::to_string(t) +
                                    " is not a grid node");
    return idx;
}

struct ResidualCase {
    bool profit_form;  // Cobb-Douglas marginal along a scaled geometric shock
    double alpha = 0.0;
    double denom = 1.0;  // D of the discounted power moment (profit form)
    double k = 1.0;      // scale (profit form)
    double c = 0.0;      // offset (cost form)
};

ResidualCase classify_residual(const BaseCapacitySpec& spec, const ShockModel& shock,
                               const ProfitModel& profit, double delta) {
    ResidualCase rc{};
    if (const auto* scaled = std::get_if<ScaledShock>(&spec)) {
        const auto* gbm = std::get_if<GeometricBrownian>(&shock);
        const auto* cd = std::get_if<CobbDouglas>(&profit);
        if (!gbm || !cd)
            throw unsupported_model(
                "representation_residual: a scaled base capacity needs a geometric shock and "
                "Cobb-Douglas profit");
        rc.profit_form = true;
        rc.alpha = cd->alpha;
        rc.denom = power_moment_denominator(cd->alpha, gbm->mu, gbm->sigma, delta);
        rc.k = scaled->k;
    } else {
        if (!std::holds_alternative<ArithmeticBrownian>(shock))
            throw unsupported_model(
                "representation_residual: a shifted base capacity needs a Brownian shock");
        rc.profit_form = false;
        rc.c = std::get<ShiftedBrownian>(spec).c;
    }
    return rc;
}

// Shared pathwise engine: fresh paths of the shock from `model` over `grid`,
// discounted from time_offset (so a state-conditioned run passes the original
// tau while simulating only the remaining horizon).
Estimate residual_engine(const ResidualCase& rc, const ShockModel& model, double delta,
                         double time_offset, const McParams& mc, std::size_t path_offset) {
    const TimeGrid& grid = mc.grid;
    std::vector<double> masses = discount_cell_masses(grid, delta);
    double far = std::exp(-delta * grid.t_max);
    double base = std::exp(-delta * time_offset);
    std::vector<double> per_path(mc.n_paths);
    parallel_for(mc.n_paths, [&](std::size_t begin, std::size_t end) {
        std::vector<double> nodes(static_cast<std::size_t>(grid.n_nodes()));
        std::vector<double> cellmax(static_cast<std::size_t>(grid.n_steps));
        for (std::size_t p = begin; p < end; ++p) {
            std::size_t stream_path = p + path_offset;
            generate_shock_path(model, grid, mc.seed, stream_path, nodes.data());
            generate_cell_maxima(model, grid, mc.seed, stream_path, nodes.data(), cellmax.data());
            double acc = 0.0;
            if (rc.profit_form) {
                // sup over [0, t_k); at the first node use the right limit l(0)
                double sup = nodes[0] * rc.k;
                for (int k = 0; k < grid.n_steps; ++k) {
                    acc += masses[static_cast<std::size_t>(k)] * std::pow(nodes[static_cast<std::size_t>(k)], rc.alpha) *
                           std::pow(sup, -rc.alpha);
                    double cm = cellmax[static_cast<std::size_t>(k)] * rc.k;
                    if (cm > sup) sup = cm;
                }
                // frozen-supremum analytic tail of the marginal-profit integral
                acc += far * std::pow(nodes[static_cast<std::size_t>(grid.n_steps)], rc.alpha) *
                       std::pow(sup, -rc.alpha) / rc.denom;
                acc = base * acc - base;
            } else {
                double sup = nodes[0] - rc.c;
                for (int k = 0; k < grid.n_steps; ++k) {
                    double cm = cellmax[static_cast<std::size_t>(k)] - rc.c;
                    double right = cm > sup ? cm : sup;
                    acc += delta * masses[static_cast<std::size_t>(k)] * 0.5 * (sup + right);
                    sup = right;
                }
                acc += far * sup;
                acc = base * (acc - nodes[0]);
            }
            per_path[p] = acc;
        }
    });
    double tail_bound;
    if (rc.profit_form)
        tail_bound = base * far / rc.denom;  // x^alpha sup^{-alpha} <= O(1) along the plan
    else
        tail_bound = base * far * (std::sqrt(2.0 * grid.t_max / 3.14159265358979323846) + rc.c + 1.0);
    return reduce_estimate(per_path, tail_bound);
}

}  // namespace

Estimate representation_residual(const BaseCapacitySpec& spec, const ShockModel& shock,
                                 const ProfitModel& profit, double delta, double tau,
                                 const McParams& mc) {
    validate(spec);
    validate(shock);
    validate(Discount{delta});
    ResidualCase rc = classify_residual(spec, shock, profit, delta);
    const TimeGrid& grid = mc.grid;
    int tau_idx = node_index_of(grid, tau, "representation_residual");
    if (tau_idx >= grid.n_steps)
        throw std::invalid_argument("representation_residual: tau must lie before t_max");
    // simulate the full horizon, then integrate from tau with the path's own
    // time-tau state; by the tower property the mean over paths is the mean
    // of the conditional residual over time-tau states
    std::vector<double> masses = discount_cell_masses(grid, delta);
    double far = std::exp(-delta * grid.t_max);
    std::vector<double> per_path(mc.n_paths);
    parallel_for(mc.n_paths, [&](std::size_t begin, std::size_t end) {
        std::vector<double> nodes(static_cast<std::size_t>(grid.n_nodes()));
        std::vector<double> cellmax(static_cast<std::size_t>(grid.n_steps));
        for (std::size_t p = begin; p < end; ++p) {
            generate_shock_path(shock, grid, mc.seed, p, nodes.data());
            generate_cell_maxima(shock, grid, mc.seed, p, nodes.data(), cellmax.data());
            double acc = 0.0;
            double disc_tau = std::exp(-delta * grid.node(tau_idx));
            if (rc.profit_form) {
                double sup = nodes[static_cast<std::size_t>(tau_idx)] * rc.k;
                for (int k = tau_idx; k < grid.n_steps; ++k) {
                    acc += masses[static_cast<std::size_t>(k)] *
                           std::pow(nodes[static_cast<std::size_t>(k)], rc.alpha) * std::pow(sup, -rc.alpha);
                    double cm = cellmax[static_cast<std::size_t>(k)] * rc.k;
                    if (cm > sup) sup = cm;
                }
                acc += far * std::pow(nodes[static_cast<std::size_t>(grid.n_steps)], rc.alpha) *
                       std::pow(sup, -rc.alpha) / rc.denom;
                acc -= disc_tau;
            } else {
                double sup = nodes[static_cast<std::size_t>(tau_idx)] - rc.c;
                for (int k = tau_idx; k < grid.n_steps; ++k) {
                    double cm = cellmax[static_cast<std::size_t>(k)] - rc.c;
                    double right = cm > sup ? cm : sup;
                    acc += delta * masses[static_cast<std::size_t>(k)] * 0.5 * (sup + right);
                    sup = right;
                }
                acc += far * sup;
                acc -= disc_tau * nodes[static_cast<std::size_t>(tau_idx)];
            }
            per_path[p] = acc;
        }
    });
    double tail_bound;
    if (rc.profit_form)
        tail_bound = far / rc.denom;
    else
        tail_bound = far * (std::sqrt(2.0 * grid.t_max / 3.14159265358979323846) + rc.c + 1.0);
    return reduce_estimate(per_path, tail_bound);
}

Estimate representation_residual_from_state(const BaseCapacitySpec& spec, const ShockModel& shock,
                                            const ProfitModel& profit, double delta, double tau,
                                            double state_x, const McParams& mc) {
    validate(spec);
    validate(shock);
    validate(Discount{delta});
    ResidualCase rc = classify_residual(spec, shock, profit, delta);
    // restart the shock at the conditioned state; the grid in mc covers the
    // remaining horizon [0, t_max - tau]
    ShockModel restarted = shock;
    if (auto* gbm = std::get_if<GeometricBrownian>(&restarted)) {
        if (!(state_x > 0.0))
            throw std::invalid_argument("representation_residual_from_state: state must be > 0");
        gbm->x0 = state_x;
    } else {
        std::get<ArithmeticBrownian>(restarted).w0 = state_x;
    }
    return residual_engine(rc, restarted, delta, tau, mc, /*path_offset=*/0);
}

}  // namespace fuel
