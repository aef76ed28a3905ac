#include "fuel/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fuel/errors.hpp"
#include "fuel/parallel.hpp"
#include "fuel/rng.hpp"

namespace fuel {

namespace {

const GeometricBrownian& require_gbm(const ShockModel& shock, const char* tag) {
    const auto* gbm = std::get_if<GeometricBrownian>(&shock);
    if (!gbm)
        throw std::invalid_argument(std::string(tag) +
                                    ": shock must be geometric Brownian for this scenario");
    return *gbm;
}

void require_firm_count(const std::vector<Firm>& firms, bool single, const char* tag) {
    if (single && firms.size() != 1)
        throw std::invalid_argument(std::string(tag) + ": expects exactly one firm, got " +
                                    std::to_string(firms.size()));
    if (!single && firms.size() < 2)
        throw std::invalid_argument(std::string(tag) + ": expects at least two firms, got " +
                                    std::to_string(firms.size()));
}

}  // namespace

const char* scenario_name(ScenarioTag tag) {
    switch (tag) {
        case ScenarioTag::bank_general: return "bank-general";
        case ScenarioTag::quadratic: return "quadratic";
        case ScenarioTag::cobb_single: return "cobb-single";
        case ScenarioTag::cobb_nfirm: return "cobb-nfirm";
    }
    throw std::invalid_argument("scenario_name: unknown tag");
}

ScenarioTag scenario_from_name(const std::string& name) {
    if (name == "bank-general") return ScenarioTag::bank_general;
    if (name == "quadratic") return ScenarioTag::quadratic;
    if (name == "cobb-single") return ScenarioTag::cobb_single;
    if (name == "cobb-nfirm") return ScenarioTag::cobb_nfirm;
    throw std::invalid_argument(
        "scenario: unknown tag \"" + name +
        "\" (expected bank-general, quadratic, cobb-single or cobb-nfirm)");
}

const char* perturbation_name(Perturbation p) {
    switch (p) {
        case Perturbation::none: return "none";
        case Perturbation::early_overinvest: return "early-overinvest";
        case Perturbation::fuel_overshoot: return "fuel-overshoot";
        case Perturbation::frozen_plan: return "frozen-plan";
    }
    throw std::invalid_argument("perturbation_name: unknown value");
}

Perturbation perturbation_from_name(const std::string& name) {
    if (name == "none") return Perturbation::none;
    if (name == "early-overinvest") return Perturbation::early_overinvest;
    if (name == "fuel-overshoot") return Perturbation::fuel_overshoot;
    if (name == "frozen-plan") return Perturbation::frozen_plan;
    throw std::invalid_argument(
        "perturb: unknown value \"" + name +
        "\" (expected none, early-overinvest, fuel-overshoot or frozen-plan)");
}

Scenario make_scenario(ScenarioTag tag, const ShockModel& shock, const FuelModel& fuel,
                       double delta, const std::vector<Firm>& firms) {
    validate(shock);
    validate(fuel);
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw std::invalid_argument("delta: must be a positive real, got " +
                                    std::to_string(delta));
    if (firms.empty()) throw std::invalid_argument("firms: at least one firm is required");

    Scenario sc;
    sc.tag = tag;
    sc.shock = shock;
    sc.fuel = fuel;
    sc.delta = delta;
    sc.firms = firms;

    bool cobb = tag != ScenarioTag::quadratic;
    for (std::size_t i = 0; i < firms.size(); ++i) {
        if (!(firms[i].y > 0.0) || !std::isfinite(firms[i].y))
            throw std::invalid_argument("firms[" + std::to_string(i) + "].y: must be > 0, got " +
                                        std::to_string(firms[i].y));
        if (cobb && !(firms[i].alpha > 0.0 && firms[i].alpha < 1.0))
            throw std::invalid_argument("firms[" + std::to_string(i) +
                                        "].alpha: must lie in (0,1), got " +
                                        std::to_string(firms[i].alpha));
    }

    switch (tag) {
        case ScenarioTag::bank_general:
            require_gbm(shock, "bank-general");
            if (!std::holds_alternative<AffineFuel>(fuel))
                throw std::invalid_argument("bank-general: fuel must be affine");
            require_firm_count(firms, true, "bank-general");
            break;
        case ScenarioTag::quadratic:
            if (!std::holds_alternative<ArithmeticBrownian>(shock))
                throw std::invalid_argument("quadratic: shock must be a standard Brownian motion");
            if (!std::holds_alternative<ConstantFuel>(fuel))
                throw std::invalid_argument("quadratic: fuel must be constant");
            require_firm_count(firms, true, "quadratic");
            break;
        case ScenarioTag::cobb_single:
            require_gbm(shock, "cobb-single");
            if (!std::holds_alternative<ConstantFuel>(fuel))
                throw std::invalid_argument("cobb-single: fuel must be constant");
            require_firm_count(firms, true, "cobb-single");
            break;
        case ScenarioTag::cobb_nfirm:
            require_gbm(shock, "cobb-nfirm");
            require_firm_count(firms, false, "cobb-nfirm");
            break;
    }

    if (cobb) {
        const auto& gbm = std::get<GeometricBrownian>(shock);
        if (!(gbm.sigma > 0.0))
            throw std::invalid_argument(
                "shock.sigma: must be > 0 for the closed-form scenarios, got " +
                std::to_string(gbm.sigma));
        double b = gbm.mu - 0.5 * gbm.sigma * gbm.sigma;
        for (const Firm& f : firms) {
            sc.k.push_back(cobb_douglas_k(f.alpha, b, gbm.sigma, delta));
            sc.D.push_back(power_moment_denominator(f.alpha, gbm.mu, gbm.sigma, delta));
        }
        sc.beta = allocation_weights(sc.k);
    } else {
        sc.c = 1.0 / std::sqrt(2.0 * delta);
        sc.beta.beta = {1.0};
    }

    double theta0 = fuel_initial(fuel);
    double y_total = 0.0;
    for (const Firm& f : firms) y_total += f.y;
    if (!(y_total < theta0))
        throw infeasible_initialization("firms: total initial capacity " +
                                        std::to_string(y_total) + " is not below theta0 " +
                                        std::to_string(theta0));
    if (firms.size() > 1) {
        std::vector<double> caps(firms.size());
        fuel_shares(sc.beta, theta0, caps.data());
        for (std::size_t i = 0; i < firms.size(); ++i)
            if (firms[i].y > caps[i])
                throw infeasible_initialization("firms[" + std::to_string(i) + "].y: " +
                                                std::to_string(firms[i].y) +
                                                " exceeds the firm's time-zero fuel share " +
                                                std::to_string(caps[i]));
    }
    return sc;
}

ProfitModel firm_profit(const Scenario& sc, std::size_t firm) {
    if (firm >= sc.firms.size()) throw std::invalid_argument("firm_profit: firm out of range");
    if (sc.tag == ScenarioTag::quadratic) return QuadraticTracking{};
    return CobbDouglas{sc.firms[firm].alpha};
}

BaseCapacitySpec firm_base(const Scenario& sc, std::size_t firm) {
    if (firm >= sc.firms.size()) throw std::invalid_argument("firm_base: firm out of range");
    if (sc.tag == ScenarioTag::quadratic) return ShiftedBrownian{sc.c};
    return ScaledShock{sc.k[firm]};
}

int scenario_orientation(const Scenario& sc) {
    return sc.tag == ScenarioTag::quadratic ? -1 : +1;
}

ScenarioPaths simulate_scenario(const Scenario& sc, const TimeGrid& grid, std::size_t n_paths,
                                std::uint64_t seed) {
    ScenarioPaths out{simulate_shock(sc.shock, grid, n_paths, seed),
                      simulate_fuel(sc.fuel, grid, n_paths, seed),
                      {},
                      PathEnsemble::constant(grid, n_paths, 0.0),
                      PathEnsemble{grid, n_paths, seed, {}},
                      {},
                      PathEnsemble::constant(grid, n_paths, 0.0)};
    for (std::size_t i = 0; i < sc.firms.size(); ++i)
        out.l.push_back(base_capacity_paths(firm_base(sc, i), out.shock));
    for (const PathEnsemble& li : out.l)
        for (std::size_t v = 0; v < li.values.size(); ++v)
            out.l_aggregate.values[v] += li.values[v];

    out.shock_sup.values.assign(out.shock.values.size(), 0.0);
    const int n = grid.n_steps;
    parallel_for(n_paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const double* nodes = out.shock.row(p);
            double* sup = out.shock_sup.row(p);
            generate_cell_maxima(sc.shock, grid, seed, p, nodes, sup, rng::bridge_cells);
            sup[n] = nodes[n];
        }
    });
    for (std::size_t i = 0; i < sc.firms.size(); ++i)
        out.l_sup.push_back(base_capacity_paths(firm_base(sc, i), out.shock_sup));
    for (const PathEnsemble& li : out.l_sup)
        for (std::size_t v = 0; v < li.values.size(); ++v)
            out.l_aggregate_sup.values[v] += li.values[v];
    return out;
}

InvestmentPlan optimal_plan(const Scenario& sc, const ScenarioPaths& paths) {
    if (sc.firms.size() == 1)
        return running_sup_policy(paths.l_sup[0], paths.theta, sc.firms[0].y);

    // The share-split policy driven by cell suprema, with one extra rule: on
    // cells where the aggregate supremum already exceeds the remaining fuel,
    // every firm is pushed to its cap outright.  That keeps the aggregate
    // plan's fuel slack identically zero wherever the multiplier density can
    // charge mass, since the node value never exceeds the cell supremum.
    const TimeGrid& grid = paths.theta.grid;
    const std::size_t nf = sc.firms.size();
    const std::size_t n_paths = paths.theta.n_paths;
    InvestmentPlan plan;
    for (std::size_t i = 0; i < nf; ++i) {
        plan.y.push_back(sc.firms[i].y);
        plan.firms.push_back(PathEnsemble::constant(grid, n_paths, sc.firms[i].y));
    }
    std::vector<double> m(nf), caps(nf);
    for (std::size_t p = 0; p < n_paths; ++p) {
        const double* tp = paths.theta.row(p);
        for (std::size_t i = 0; i < nf; ++i) m[i] = sc.firms[i].y;
        for (int k = 1; k <= grid.n_steps; ++k) {
            const int j = k - 1;
            fuel_shares(sc.beta, tp[j], caps.data());
            double agg = 0.0;
            for (std::size_t i = 0; i < nf; ++i) agg += paths.l_sup[i].at(p, j);
            for (std::size_t i = 0; i < nf; ++i) {
                double cand = agg > tp[j] ? caps[i] : std::min(paths.l_sup[i].at(p, j), caps[i]);
                if (cand > m[i]) m[i] = cand;
                plan.firms[i].row(p)[k] = m[i];
            }
        }
    }
    return plan;
}

Scenario with_generous_fuel(const Scenario& sc, double factor) {
    if (!(factor >= 1.0)) throw std::invalid_argument("with_generous_fuel: factor must be >= 1");
    Scenario out = sc;
    if (auto* cf = std::get_if<ConstantFuel>(&out.fuel)) {
        cf->theta0 *= factor;
    } else if (auto* af = std::get_if<AffineFuel>(&out.fuel)) {
        af->theta0 *= factor;
        af->rate *= factor;
    } else {
        auto& rm = std::get<RunningMaxFuel>(out.fuel);
        rm.theta0 *= factor;
    }
    return out;
}

double perturbation_bump(const Scenario& sc) { return 0.1 * fuel_initial(sc.fuel); }

InvestmentPlan perturbed_plan(const Scenario& sc, const ScenarioPaths& paths, Perturbation p) {
    InvestmentPlan plan = optimal_plan(sc, paths);
    if (p == Perturbation::none) return plan;

    std::size_t n_firms = plan.n_firms();
    std::size_t width = static_cast<std::size_t>(plan.grid().n_nodes());

    if (p == Perturbation::frozen_plan) {
        for (std::size_t i = 0; i < n_firms; ++i)
            plan.firms[i] =
                PathEnsemble::constant(plan.grid(), plan.n_paths(), plan.y[i]);
        return plan;
    }

    double bump = perturbation_bump(sc);
    parallel_for(plan.n_paths(), [&](std::size_t begin, std::size_t end) {
        std::vector<double> caps(n_firms);
        for (std::size_t p_idx = begin; p_idx < end; ++p_idx) {
            const double* tp = paths.theta.row(p_idx);
            for (std::size_t k = 1; k < width; ++k) {
                fuel_shares(sc.beta, tp[k - 1], caps.data());
                if (p == Perturbation::early_overinvest) {
                    // The first firm front-loads a tenth of the initial fuel,
                    // capped by its own share so the aggregate stays inside.
                    double* np = plan.firms[0].values.data() + p_idx * width;
                    np[k] = std::min(np[k] + bump, caps[0]);
                } else {  // fuel_overshoot: every firm rides its cap
                    for (std::size_t i = 0; i < n_firms; ++i) {
                        double* np = plan.firms[i].values.data() + p_idx * width;
                        np[k] = std::max(plan.y[i], caps[i]);
                    }
                }
            }
        }
    });
    return plan;
}

InvestmentPlan challenger_plan(const Scenario& sc, const ScenarioPaths& paths,
                               std::uint64_t master_seed, std::size_t index) {
    UniformStream draws(master_seed, rng::challenger_draws, index);
    double u1 = draws.next();
    double u2 = draws.next();

    const TimeGrid& grid = paths.theta.grid;
    std::size_t n_firms = sc.firms.size();
    std::size_t width = static_cast<std::size_t>(grid.n_nodes());
    std::size_t half = std::max<std::size_t>(1, static_cast<std::size_t>(grid.n_steps) / 2);
    std::size_t family = index % 5;

    // Family knobs; unused ones stay neutral.
    double scale = 1.0;
    std::size_t from = 1, lag = 0;
    switch (family) {
        case 1: scale = 0.5 + 1.5 * u1; break;
        case 2: from = 1 + static_cast<std::size_t>(u1 * static_cast<double>(half)); break;
        case 4: lag = 1 + static_cast<std::size_t>(u1 * 20.0); break;
        default: break;
    }

    InvestmentPlan plan;
    for (const Firm& f : sc.firms) plan.y.push_back(f.y);
    for (std::size_t i = 0; i < n_firms; ++i)
        plan.firms.push_back(PathEnsemble::constant(grid, paths.theta.n_paths, sc.firms[i].y));
    if (family == 0) return plan;  // frozen

    parallel_for(paths.theta.n_paths, [&](std::size_t begin, std::size_t end) {
        std::vector<double> caps(n_firms);
        std::vector<double> m(n_firms);
        for (std::size_t p = begin; p < end; ++p) {
            const double* tp = paths.theta.row(p);
            if (family == 3) {
                // One adapted step at `from` to a random point between y and
                // the share available at the decision node.
                fuel_shares(sc.beta, tp[from - 1], caps.data());
                for (std::size_t i = 0; i < n_firms; ++i) {
                    double target = sc.firms[i].y + u2 * (caps[i] - sc.firms[i].y);
                    double* np = plan.firms[i].values.data() + p * width;
                    for (std::size_t k = from; k < width; ++k) np[k] = target;
                }
                continue;
            }
            for (std::size_t i = 0; i < n_firms; ++i) m[i] = sc.firms[i].y;
            for (std::size_t k = 1; k < width; ++k) {
                // Same reflection recursion as the optimal plan, but fed
                // scaled / delayed / stale information.
                if (k >= from + lag) {
                    std::size_t j = k - 1 - lag;
                    fuel_shares(sc.beta, tp[j], caps.data());
                    for (std::size_t i = 0; i < n_firms; ++i) {
                        double capped = std::min(scale * paths.l[i].at(p, j), caps[i]);
                        if (capped > m[i]) m[i] = capped;
                    }
                }
                for (std::size_t i = 0; i < n_firms; ++i)
                    plan.firms[i].values[p * width + k] = m[i];
            }
        }
    });
    return plan;
}

}  // namespace fuel
