#include "fuel/functional.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>

#include "fuel/errors.hpp"
#include "fuel/parallel.hpp"

namespace fuel {

namespace {

std::vector<double> node_discounts(const TimeGrid& grid, double delta) {
    std::vector<double> d(static_cast<std::size_t>(grid.n_nodes()));
    for (int k = 0; k <= grid.n_steps; ++k)
        d[static_cast<std::size_t>(k)] = std::exp(-delta * grid.node(k));
    return d;
}

void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* who) {
    if (a.n_steps != b.n_steps || a.t_max != b.t_max)
        throw std::invalid_argument(std::string(who) + ": inputs live on different grids");
}

ShockModel rebase_shock(const ShockModel& model, double x) {
    if (const auto* g = std::get_if<GeometricBrownian>(&model)) {
        GeometricBrownian m = *g;
        m.x0 = x;
        return m;
    }
    ArithmeticBrownian m = std::get<ArithmeticBrownian>(model);
    m.w0 = x;
    return m;
}

double base_value(const BaseCapacitySpec& spec, double shock) {
    if (const auto* s = std::get_if<ScaledShock>(&spec)) return s->k * shock;
    return shock - std::get<ShiftedBrownian>(spec).c;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

ProfitBreakdown net_profit(const InvestmentPlan& plan, const PathEnsemble& shock,
                           const ShockModel& model, const std::vector<ProfitModel>& profit,
                           double delta, std::vector<double>* aggregate_per_path) {
    validate(model);
    validate(Discount{delta});
    if (plan.n_firms() == 0) throw std::invalid_argument("net_profit: plan has no firms");
    if (profit.size() != plan.n_firms())
        throw std::invalid_argument("net_profit: one profit model per firm required");
    require_same_grid(plan.grid(), shock.grid, "net_profit");
    if (plan.n_paths() != shock.n_paths)
        throw std::invalid_argument("net_profit: plan and shock path counts differ");
    const auto* gbm = std::get_if<GeometricBrownian>(&model);
    if (!gbm) throw std::invalid_argument("net_profit: operating profit needs the geometric shock");

    std::size_t nf = plan.n_firms();
    std::vector<double> alpha(nf), dden(nf);
    for (std::size_t i = 0; i < nf; ++i) {
        validate(profit[i]);
        if (orientation(profit[i]) < 0)
            throw std::invalid_argument("net_profit: tracking costs are minimized; use tracking_cost");
        alpha[i] = std::get<CobbDouglas>(profit[i]).alpha;
        dden[i] = power_moment_denominator(alpha[i], gbm->mu, gbm->sigma, delta);
    }

    const TimeGrid& grid = shock.grid;
    int n = grid.n_steps;
    double dt = grid.dt();
    auto disc = node_discounts(grid, delta);
    std::size_t paths = shock.n_paths;

    std::vector<std::vector<double>> vals(nf, std::vector<double>(paths));
    std::vector<std::vector<double>> tails(nf, std::vector<double>(paths));
    std::vector<double> agg(paths);

    parallel_for(paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const double* x = shock.row(p);
            double total = 0.0;
            for (std::size_t i = 0; i < nf; ++i) {
                const double* nu = plan.firms[i].row(p);
                double rev = 0.0, inv = 0.0;
                for (int k = 0; k < n; ++k) {
                    std::size_t ks = static_cast<std::size_t>(k);
                    rev += disc[ks] * profit_value(profit[i], x[k], nu[k]) * dt;
                    inv += disc[ks] * (nu[k + 1] - nu[k]);
                }
                double v = rev - inv;
                vals[i][p] = v;
                total += v;
                // frozen continuation beyond t_max, in closed form
                tails[i][p] = disc[static_cast<std::size_t>(n)] * std::pow(x[n], alpha[i]) *
                              std::pow(nu[n], 1.0 - alpha[i]) / ((1.0 - alpha[i]) * dden[i]);
            }
            agg[p] = total;
        }
    });

    ProfitBreakdown out;
    double agg_tail = 0.0;
    for (std::size_t i = 0; i < nf; ++i) {
        double tb = mean_of(tails[i]);
        agg_tail += tb;
        out.per_firm.push_back(reduce_estimate(vals[i], tb));
    }
    out.aggregate = reduce_estimate(agg, agg_tail);
    if (aggregate_per_path) *aggregate_per_path = std::move(agg);
    return out;
}

ProfitBreakdown net_profit(const InvestmentPlan& plan, const PathEnsemble& shock,
                           const ShockModel& model, const ProfitModel& profit, double delta,
                           std::vector<double>* aggregate_per_path) {
    return net_profit(plan, shock, model, std::vector<ProfitModel>(plan.n_firms(), profit), delta,
                      aggregate_per_path);
}

Estimate tracking_cost(const InvestmentPlan& plan, const PathEnsemble& w, double delta,
                       std::vector<double>* per_path) {
    validate(Discount{delta});
    if (plan.n_firms() != 1)
        throw std::invalid_argument("tracking_cost: the tracking objective is single-firm");
    require_same_grid(plan.grid(), w.grid, "tracking_cost");
    if (plan.n_paths() != w.n_paths)
        throw std::invalid_argument("tracking_cost: plan and shock path counts differ");

    const TimeGrid& grid = w.grid;
    int n = grid.n_steps;
    double dt = grid.dt();
    auto disc = node_discounts(grid, delta);
    std::size_t paths = w.n_paths;
    std::vector<double> vals(paths), tails(paths);

    parallel_for(paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const double* x = w.row(p);
            const double* nu = plan.firms[0].row(p);
            double acc = 0.0;
            for (int k = 0; k < n; ++k) {
                double d = x[k] - nu[k];
                acc += delta * disc[static_cast<std::size_t>(k)] * 0.5 * d * d * dt;
            }
            double dT = x[n] - nu[n];
            // exact remainder for the frozen plan: E (nu - W_s)^2 grows linearly
            tails[p] = disc[static_cast<std::size_t>(n)] * (0.5 * dT * dT + 0.5 / delta);
            vals[p] = acc;
        }
    });
    if (per_path) *per_path = vals;
    return reduce_estimate(vals, mean_of(tails));
}

Estimate plan_objective(const Scenario& sc, const ScenarioPaths& paths, const InvestmentPlan& plan,
                        std::vector<double>* per_path) {
    if (sc.tag == ScenarioTag::quadratic)
        return tracking_cost(plan, paths.shock, sc.delta, per_path);
    std::vector<ProfitModel> models;
    models.reserve(sc.firms.size());
    for (const Firm& f : sc.firms) models.push_back(CobbDouglas{f.alpha});
    return net_profit(plan, paths.shock, sc.shock, models, sc.delta, per_path).aggregate;
}

Estimate supergradient(double t, const MarkovState& state, const PolicyDescription& pol,
                       const ProfitModel& profit, double delta, const McParams& mc,
                       std::uint64_t inner_path_base) {
    validate(pol.shock);
    validate(profit);
    validate(Discount{delta});
    if (t < 0.0) throw std::invalid_argument("supergradient: t must be nonnegative");
    if (std::holds_alternative<RunningMaxFuel>(pol.fuel))
        throw unsupported_model("supergradient: stochastic fuel is not a Markov state coordinate");
    if (mc.grid.n_steps < 1 || !(mc.grid.t_max > 0.0))
        throw std::invalid_argument("supergradient: mc.grid must cover the remaining horizon");
    if (mc.n_paths < 2) throw std::invalid_argument("supergradient: needs at least 2 inner paths");
    if (!(pol.beta > 0.0 && pol.beta <= 1.0))
        throw std::invalid_argument("supergradient: beta must lie in (0, 1]");
    if (!(state.running_cap > 0.0))
        throw std::invalid_argument("supergradient: running_cap must be positive");
    if (!(state.fuel > 0.0)) throw std::invalid_argument("supergradient: fuel must be positive");

    bool cd = orientation(profit) > 0;
    double alpha = 0.0, dden = 1.0;
    if (cd) {
        const auto* gbm = std::get_if<GeometricBrownian>(&pol.shock);
        if (!gbm)
            throw std::invalid_argument("supergradient: operating profit needs the geometric shock");
        if (!(state.x > 0.0))
            throw std::invalid_argument("supergradient: state.x must be positive");
        alpha = std::get<CobbDouglas>(profit).alpha;
        dden = power_moment_denominator(alpha, gbm->mu, gbm->sigma, delta);
    }
    double rate = 0.0;
    if (const auto* af = std::get_if<AffineFuel>(&pol.fuel)) rate = af->rate;

    ShockModel inner = rebase_shock(pol.shock, state.x);
    const TimeGrid& g = mc.grid;
    int r = g.n_steps;
    auto masses = discount_cell_masses(g, delta);
    double disc0 = std::exp(-delta * t);
    double dend = std::exp(-delta * g.t_max);

    std::vector<double> vals(mc.n_paths), tails(mc.n_paths);
    parallel_for(mc.n_paths, [&](std::size_t begin, std::size_t end) {
        std::vector<double> nodes(static_cast<std::size_t>(g.n_nodes()));
        std::vector<double> maxima(static_cast<std::size_t>(r));
        for (std::size_t j = begin; j < end; ++j) {
            std::uint64_t id = inner_path_base + j;
            generate_shock_path(inner, g, mc.seed, id, nodes.data(), rng::inner_paths);
            generate_cell_maxima(inner, g, mc.seed, id, nodes.data(), maxima.data(),
                                 rng::inner_bridge);
            double m = pol.law == PlanLaw::reflection_bumped ? state.aux : state.running_cap;
            double nu = state.running_cap;
            double pow_nu = cd ? std::pow(nu, -alpha) : 0.0;
            double acc = 0.0;
            for (int cell = 0; cell < r; ++cell) {
                std::size_t cs = static_cast<std::size_t>(cell);
                double cap = pol.beta * (state.fuel + rate * g.node(cell));
                double lmax = base_value(pol.base, maxima[cs]);
                double prev = nu;
                switch (pol.law) {
                    case PlanLaw::reflection:
                        m = std::max(m, std::min(lmax, cap));
                        nu = m;
                        break;
                    case PlanLaw::frozen:
                        break;
                    case PlanLaw::reflection_bumped:
                        m = std::max(m, std::min(lmax, cap));
                        nu = std::min(m + pol.bump, cap);
                        break;
                    case PlanLaw::cap_riding:
                        nu = std::max(nu, cap);
                        break;
                }
                if (cd) {
                    if (nu != prev) pow_nu = std::pow(nu, -alpha);
                    acc += masses[cs] * std::pow(nodes[cs], alpha) * pow_nu;
                } else {
                    acc += delta * masses[cs] * (nu - nodes[cs]);
                }
            }
            std::size_t rs = static_cast<std::size_t>(r);
            double tail = cd ? dend * std::pow(nodes[rs], alpha) * pow_nu / dden
                             : dend * (nu - nodes[rs]);
            vals[j] = disc0 * (acc + tail) - (cd ? disc0 : 0.0);
            tails[j] = std::fabs(disc0 * tail);
        }
    });
    return reduce_estimate(vals, mean_of(tails));
}

Estimate snell_at_optimum(const Scenario& sc, double t, const McParams& mc) {
    const TimeGrid& g = mc.grid;
    if (g.n_steps < 1 || !(g.t_max > 0.0))
        throw std::invalid_argument("snell_at_optimum: mc.grid must span [0, t_max]");
    if (mc.n_paths < 2) throw std::invalid_argument("snell_at_optimum: needs at least 2 paths");
    int n = g.n_steps;
    double dt = g.dt();
    int t_idx = static_cast<int>(std::llround(t / dt));
    if (t_idx < 0 || t_idx > n || std::fabs(g.node(t_idx) - t) > 1e-9 * std::max(1.0, g.t_max))
        throw std::invalid_argument("snell_at_optimum: t must be a grid node in [0, t_max]");

    double delta = sc.delta;
    double dTail = std::exp(-delta * g.t_max);
    std::size_t paths = mc.n_paths;
    std::vector<double> vals(paths, 0.0), tails(paths, 0.0);

    switch (sc.tag) {
        case ScenarioTag::quadratic: {
            double theta0 = fuel_initial(sc.fuel);
            double level = theta0 + sc.c;
            parallel_for(paths, [&](std::size_t begin, std::size_t end) {
                std::vector<double> nodes(static_cast<std::size_t>(g.n_nodes()));
                std::vector<double> maxima(static_cast<std::size_t>(n));
                for (std::size_t p = begin; p < end; ++p) {
                    generate_shock_path(sc.shock, g, mc.seed, p, nodes.data(), rng::snell_paths);
                    generate_cell_maxima(sc.shock, g, mc.seed, p, nodes.data(), maxima.data(),
                                         rng::inner_bridge);
                    std::size_t ti = static_cast<std::size_t>(t_idx);
                    if (nodes[ti] > level) {  // already past the boundary at t
                        vals[p] = std::exp(-delta * t) * (theta0 - nodes[ti]);
                        continue;
                    }
                    double v = 0.0, tb = sc.c * dTail;
                    for (int k = t_idx; k < n; ++k) {
                        if (maxima[static_cast<std::size_t>(k)] > level) {
                            // the boundary is hit inside cell k; the crossing value
                            // theta0 - W = -c is exact, the time is mid-cell
                            v = -sc.c * std::exp(-delta * (g.node(k) + 0.5 * dt));
                            tb = 0.0;
                            break;
                        }
                    }
                    vals[p] = v;
                    tails[p] = tb;
                }
            });
            break;
        }
        case ScenarioTag::cobb_single: {
            double theta0 = fuel_initial(sc.fuel);
            double alpha = sc.firms[0].alpha;
            double level = theta0 / sc.k[0];
            double pow_theta0 = std::pow(theta0, -alpha);
            double creep = std::pow(sc.k[0], -alpha) / sc.D[0] - 1.0;
            parallel_for(paths, [&](std::size_t begin, std::size_t end) {
                std::vector<double> nodes(static_cast<std::size_t>(g.n_nodes()));
                std::vector<double> maxima(static_cast<std::size_t>(n));
                for (std::size_t p = begin; p < end; ++p) {
                    generate_shock_path(sc.shock, g, mc.seed, p, nodes.data(), rng::snell_paths);
                    generate_cell_maxima(sc.shock, g, mc.seed, p, nodes.data(), maxima.data(),
                                         rng::inner_bridge);
                    std::size_t ti = static_cast<std::size_t>(t_idx);
                    if (nodes[ti] > level) {
                        vals[p] = std::exp(-delta * t) *
                                  (std::pow(nodes[ti], alpha) * pow_theta0 / sc.D[0] - 1.0);
                        continue;
                    }
                    double v = 0.0, tb = std::fabs(creep) * dTail;
                    for (int k = t_idx; k < n; ++k) {
                        if (maxima[static_cast<std::size_t>(k)] > level) {
                            v = creep * std::exp(-delta * (g.node(k) + 0.5 * dt));
                            tb = 0.0;
                            break;
                        }
                    }
                    vals[p] = v;
                    tails[p] = tb;
                }
            });
            break;
        }
        case ScenarioTag::bank_general: {
            double alpha = sc.firms[0].alpha;
            double k0 = sc.k[0];
            double y = sc.firms[0].y;
            auto masses = discount_cell_masses(g, delta);
            auto disc = node_discounts(g, delta);
            std::vector<double> theta_abs(static_cast<std::size_t>(g.n_nodes()));
            for (int k = 0; k <= n; ++k)
                theta_abs[static_cast<std::size_t>(k)] = fuel_at(sc.fuel, g.node(k));
            parallel_for(paths, [&](std::size_t begin, std::size_t end) {
                std::vector<double> nodes(static_cast<std::size_t>(g.n_nodes()));
                for (std::size_t p = begin; p < end; ++p) {
                    generate_shock_path(sc.shock, g, mc.seed, p, nodes.data(), rng::snell_paths);
                    // suffix of the plan's own drift integrand from the first
                    // support node at or after t; node-level, like the plan
                    double nu = y, pow_nu = std::pow(y, -alpha);
                    bool started = false;
                    double acc = 0.0;
                    for (int k = 0; k < n; ++k) {
                        std::size_t ks = static_cast<std::size_t>(k);
                        double l = k0 * nodes[ks];
                        double cand = std::min(l, theta_abs[ks]);
                        if (cand > nu) {
                            nu = cand;
                            pow_nu = std::pow(nu, -alpha);
                        }
                        if (!started && k >= t_idx && l > theta_abs[ks + 1]) started = true;
                        if (started)
                            acc += masses[ks] * (std::pow(nodes[ks], alpha) * pow_nu - delta);
                    }
                    std::size_t ns = static_cast<std::size_t>(n);
                    double tail = disc[ns] * (std::pow(nodes[ns], alpha) * pow_nu / sc.D[0] - 1.0);
                    if (started) {
                        vals[p] = acc + tail;
                        tails[p] = std::fabs(tail);
                    } else {
                        vals[p] = 0.0;
                        tails[p] = disc[ns] *
                                   (std::pow(nodes[ns], alpha) * pow_nu / sc.D[0] + 1.0);
                    }
                }
            });
            break;
        }
        case ScenarioTag::cobb_nfirm:
            throw unsupported_model("snell_at_optimum: no closed form for the social planner case");
    }
    return reduce_estimate(vals, mean_of(tails));
}

MultiplierDensity lagrange_density(const Scenario& sc, const ScenarioPaths& paths) {
    const TimeGrid& g = paths.shock.grid;
    require_same_grid(g, paths.theta.grid, "lagrange_density");
    require_same_grid(g, paths.l_aggregate.grid, "lagrange_density");
    if (paths.shock.n_paths != paths.theta.n_paths ||
        paths.shock.n_paths != paths.l_aggregate.n_paths)
        throw std::invalid_argument("lagrange_density: path counts differ");

    int n = g.n_steps;
    std::size_t width = static_cast<std::size_t>(g.n_nodes());
    std::size_t npaths = paths.shock.n_paths;
    double delta = sc.delta;
    auto disc = node_discounts(g, delta);
    double theta0 = fuel_initial(sc.fuel);
    std::size_t nf = sc.firms.size();

    MultiplierDensity md;
    md.grid = g;
    md.n_paths = npaths;
    md.orientation = scenario_orientation(sc);
    md.density.assign(npaths * width, 0.0);
    md.support.assign(npaths * width, 0);

    parallel_for(npaths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const double* x = paths.shock.row(p);
            const double* th = paths.theta.row(p);
            const double* la = paths.l_aggregate.row(p);
            double* dens = md.density.data() + p * width;
            unsigned char* sup = md.support.data() + p * width;
            for (int k = 0; k <= n; ++k) {
                std::size_t ks = static_cast<std::size_t>(k);
                // left-node test, like every other dt-integrand here.  The
                // fuel processes are continuous, so theta(t+) = theta(t), and
                // this is also the node at which the plan's caps bind, which
                // keeps the complementarity slack exactly zero on support.
                if (!(la[ks] > th[ks])) continue;
                sup[ks] = 1;
                double v = 0.0;
                switch (sc.tag) {
                    case ScenarioTag::bank_general:
                        v = disc[ks] * (std::pow(x[ks], sc.firms[0].alpha) *
                                            std::pow(th[ks], -sc.firms[0].alpha) -
                                        delta);
                        break;
                    case ScenarioTag::quadratic:
                        v = disc[ks] * delta * (theta0 - x[ks]);
                        break;
                    case ScenarioTag::cobb_single:
                        v = disc[ks] * (std::pow(x[ks], sc.firms[0].alpha) *
                                            std::pow(theta0, -sc.firms[0].alpha) -
                                        delta);
                        break;
                    case ScenarioTag::cobb_nfirm: {
                        double s = 0.0;
                        for (std::size_t i = 0; i < nf; ++i) {
                            double a = sc.firms[i].alpha;
                            s += sc.beta.beta[i] *
                                 (std::pow(x[ks], a) * std::pow(sc.beta.beta[i] * th[ks], -a) -
                                  delta);
                        }
                        v = disc[ks] * s;
                        break;
                    }
                }
                dens[ks] = v;
            }
        }
    });

    // The closed forms make the density strictly signed on support; a
    // violation means the inputs do not belong to the scenario.
    for (std::size_t p = 0; p < npaths; ++p)
        for (int k = 0; k <= n; ++k)
            if (md.on_support(p, k) && !(md.orientation * md.at(p, k) > 0.0)) {
                char msg[160];
                std::snprintf(msg, sizeof msg,
                              "lagrange_density: density sign contradicts orientation %+d at "
                              "path %zu node %d (value %g)",
                              md.orientation, p, k, md.at(p, k));
                throw std::logic_error(msg);
            }
    return md;
}

namespace {

// Shared precomputation of one verification run.  Everything indexed by
// absolute grid node so inner continuations reuse the same tables.
struct KktCtx {
    const Scenario* sc = nullptr;
    const InvestmentPlan* plan = nullptr;
    int n = 0;
    std::size_t nf = 0;
    double delta = 0.0;
    bool quad = false;
    double coff = 0.0;    // quadratic base offset c
    double ksum = 0.0;    // aggregate base scale
    double theta0 = 0.0;
    double wtilde = 0.0;  // exact relative discount mass of one cell
    double bump = 0.0;
    std::vector<PlanLaw> law;           // per firm
    std::vector<double> disc;           // e^{-delta t_k}
    std::vector<double> masses;         // exact absolute cell masses
    std::vector<double> theta_abs;      // deterministic fuel at the nodes
    std::vector<double> caps_abs;       // node x firm exact share splits
    std::vector<double> pow_theta;      // bank: theta^(-alpha) per node
    std::vector<double> pow_btheta;     // nfirm: (beta_i theta)^(-alpha_i), node x firm
    double pow_theta0 = 0.0;            // cobb_single
    std::size_t inner = 0;
    std::uint64_t seed = 0;
    std::vector<TimeGrid> suffix;       // suffix[r]: grid with r steps of the same dt
};

// Conditional gap estimates at one outer state: from absolute node a with
// shock value x and per-firm plan levels cap0 (aux0 carries the underlying
// reflection level for the bumped law), run ctx.inner continuations and
// write the per-(firm, inner path) values of
//   gradient integral - unit cost - multiplier suffix
// into out[i * inner + j].  One shared shock continuation serves every firm
// and the multiplier estimate, so the difference is paired.
void state_gaps(const KktCtx& c, int a, double x, const double* cap0, const double* aux0,
                std::uint64_t id_base, std::vector<double>& out) {
    int r = c.n - a;
    const TimeGrid& sg = c.suffix[static_cast<std::size_t>(r)];
    std::size_t nf = c.nf;
    out.assign(nf * c.inner, 0.0);
    std::vector<double> nodes(static_cast<std::size_t>(sg.n_nodes()));
    std::vector<double> maxima(static_cast<std::size_t>(r));
    std::vector<double> m(nf), nu(nf), pow_nu(nf), acc_r(nf), pow_x(nf);
    ShockModel restarted = rebase_shock(c.sc->shock, x);
    std::size_t ns = static_cast<std::size_t>(c.n);
    std::size_t as = static_cast<std::size_t>(a);

    for (std::size_t j = 0; j < c.inner; ++j) {
        std::uint64_t id = id_base + j;
        generate_shock_path(restarted, sg, c.seed, id, nodes.data(), rng::inner_paths);
        generate_cell_maxima(restarted, sg, c.seed, id, nodes.data(), maxima.data(),
                             rng::inner_bridge);
        for (std::size_t i = 0; i < nf; ++i) {
            m[i] = c.law[i] == PlanLaw::reflection_bumped ? aux0[i] : cap0[i];
            nu[i] = cap0[i];
            if (!c.quad) pow_nu[i] = std::pow(nu[i], -c.sc->firms[i].alpha);
            acc_r[i] = 0.0;
        }
        double acc_l = 0.0;
        for (int cell = 0; cell < r; ++cell) {
            std::size_t ka = as + static_cast<std::size_t>(cell);
            std::size_t cs = static_cast<std::size_t>(cell);
            const double* caps = c.caps_abs.data() + ka * nf;
            double xm = nodes[cs];
            for (std::size_t i = 0; i < nf; ++i) {
                double lmax = c.quad ? maxima[cs] - c.coff : c.sc->k[i] * maxima[cs];
                double prev = nu[i];
                switch (c.law[i]) {
                    case PlanLaw::reflection:
                        m[i] = std::max(m[i], std::min(lmax, caps[i]));
                        nu[i] = m[i];
                        break;
                    case PlanLaw::frozen:
                        break;
                    case PlanLaw::reflection_bumped:
                        m[i] = std::max(m[i], std::min(lmax, caps[i]));
                        nu[i] = std::min(m[i] + c.bump, caps[i]);
                        break;
                    case PlanLaw::cap_riding:
                        nu[i] = std::max(nu[i], caps[i]);
                        break;
                }
                if (c.quad) {
                    acc_r[i] += c.delta * c.masses[ka] * (nu[i] - xm);
                } else {
                    double alpha = c.sc->firms[i].alpha;
                    pow_x[i] = std::pow(xm, alpha);
                    if (nu[i] != prev) pow_nu[i] = std::pow(nu[i], -alpha);
                    acc_r[i] += c.masses[ka] * pow_x[i] * pow_nu[i];
                }
            }
            double lagg = c.quad ? xm - c.coff : c.ksum * xm;
            if (lagg > c.theta_abs[ka]) {
                double dens = 0.0;
                switch (c.sc->tag) {
                    case ScenarioTag::bank_general:
                        dens = c.disc[ka] * (pow_x[0] * c.pow_theta[ka] - c.delta);
                        break;
                    case ScenarioTag::quadratic:
                        dens = c.disc[ka] * c.delta * (c.theta0 - xm);
                        break;
                    case ScenarioTag::cobb_single:
                        dens = c.disc[ka] * (pow_x[0] * c.pow_theta0 - c.delta);
                        break;
                    case ScenarioTag::cobb_nfirm: {
                        double s = 0.0;
                        for (std::size_t i = 0; i < nf; ++i)
                            s += c.sc->beta.beta[i] *
                                 (pow_x[i] * c.pow_btheta[ka * nf + i] - c.delta);
                        dens = s;
                        dens *= c.disc[ka];
                        break;
                    }
                }
                acc_l += c.wtilde * dens;
            }
        }
        std::size_t rs = static_cast<std::size_t>(r);
        for (std::size_t i = 0; i < nf; ++i) {
            double gap;
            if (c.quad) {
                gap = acc_r[i] + c.disc[ns] * (nu[i] - nodes[rs]) - acc_l;
            } else {
                double alpha = c.sc->firms[i].alpha;
                gap = acc_r[i] + c.disc[ns] * std::pow(nodes[rs], alpha) * pow_nu[i] / c.sc->D[i] -
                      c.disc[as] - acc_l;
            }
            out[i * c.inner + j] = gap;
        }
    }
}

// Horizon-censored slots: the frozen-tail value of the gradient at t_max
// with no multiplier mass left to integrate.
void censored_gaps(const KktCtx& c, const PathEnsemble& shock, std::size_t p,
                   std::vector<double>& out) {
    out.assign(c.nf, 0.0);
    std::size_t ns = static_cast<std::size_t>(c.n);
    double xn = shock.at(p, c.n);
    for (std::size_t i = 0; i < c.nf; ++i) {
        double nun = c.plan->firms[i].at(p, c.n);
        if (c.quad)
            out[i] = c.disc[ns] * (nun - xn);
        else
            out[i] = c.disc[ns] *
                     (std::pow(xn / nun, c.sc->firms[i].alpha) / c.sc->D[i] - 1.0);
    }
}

}  // namespace

KktReport kkt_report(const Scenario& sc, const ScenarioPaths& paths, const InvestmentPlan& plan,
                     const MultiplierDensity& density, Perturbation perturb,
                     const KktBudget& budget, std::uint64_t seed) {
    const TimeGrid& grid = paths.shock.grid;
    require_same_grid(grid, plan.grid(), "kkt_report");
    require_same_grid(grid, density.grid, "kkt_report");
    std::size_t all_paths = paths.shock.n_paths;
    if (plan.n_paths() != all_paths || density.n_paths != all_paths)
        throw std::invalid_argument("kkt_report: plan, paths and density path counts differ");
    if (plan.n_firms() != sc.firms.size())
        throw std::invalid_argument("kkt_report: plan and scenario firm counts differ");
    if (budget.outer_paths < 1 || budget.inner_paths < 2)
        throw std::invalid_argument("kkt_report: budget needs outer_paths >= 1, inner_paths >= 2");
    if (!(budget.tolerance > 0.0))
        throw std::invalid_argument("kkt_report: tolerance must be positive");
    if (!fuel_is_deterministic(sc.fuel))
        throw unsupported_model(
            "kkt_report: condition 1 restarts from a Markov state, which needs "
            "deterministic fuel");

    int n = grid.n_steps;
    double dt = grid.dt();
    std::size_t nf = sc.firms.size();
    double tol = budget.tolerance;
    int orient = scenario_orientation(sc);

    KktCtx ctx;
    ctx.sc = &sc;
    ctx.plan = &plan;
    ctx.n = n;
    ctx.nf = nf;
    ctx.delta = sc.delta;
    ctx.quad = sc.tag == ScenarioTag::quadratic;
    ctx.coff = sc.c;
    ctx.theta0 = fuel_initial(sc.fuel);
    ctx.wtilde = (1.0 - std::exp(-sc.delta * dt)) / sc.delta;
    ctx.bump = perturbation_bump(sc);
    ctx.disc = node_discounts(grid, sc.delta);
    ctx.masses = discount_cell_masses(grid, sc.delta);
    ctx.inner = budget.inner_paths;
    ctx.seed = seed;
    for (double k : sc.k) ctx.ksum += k;

    std::size_t width = static_cast<std::size_t>(grid.n_nodes());
    ctx.theta_abs.resize(width);
    ctx.caps_abs.resize(width * nf);
    for (int k = 0; k <= n; ++k) {
        std::size_t ks = static_cast<std::size_t>(k);
        ctx.theta_abs[ks] = fuel_at(sc.fuel, grid.node(k));
        fuel_shares(sc.beta, ctx.theta_abs[ks], ctx.caps_abs.data() + ks * nf);
    }
    if (sc.tag == ScenarioTag::bank_general) {
        ctx.pow_theta.resize(width);
        for (std::size_t k = 0; k < width; ++k)
            ctx.pow_theta[k] = std::pow(ctx.theta_abs[k], -sc.firms[0].alpha);
    } else if (sc.tag == ScenarioTag::cobb_single) {
        ctx.pow_theta0 = std::pow(ctx.theta0, -sc.firms[0].alpha);
    } else if (sc.tag == ScenarioTag::cobb_nfirm) {
        ctx.pow_btheta.resize(width * nf);
        for (std::size_t k = 0; k < width; ++k)
            for (std::size_t i = 0; i < nf; ++i)
                ctx.pow_btheta[k * nf + i] =
                    std::pow(sc.beta.beta[i] * ctx.theta_abs[k], -sc.firms[i].alpha);
    }
    ctx.suffix.resize(width);
    for (int r = 1; r <= n; ++r)
        ctx.suffix[static_cast<std::size_t>(r)] = make_grid(r * dt, r);

    ctx.law.assign(nf, PlanLaw::reflection);
    switch (perturb) {
        case Perturbation::none:
            break;
        case Perturbation::frozen_plan:
            ctx.law.assign(nf, PlanLaw::frozen);
            break;
        case Perturbation::fuel_overshoot:
            ctx.law.assign(nf, PlanLaw::cap_riding);
            break;
        case Perturbation::early_overinvest:
            ctx.law[0] = PlanLaw::reflection_bumped;
            break;
    }

    KktReport rep;
    rep.scenario = scenario_name(sc.tag);
    rep.orientation = orient;
    rep.objective = plan_objective(sc, paths, plan);
    double floor = 0.01 * std::fabs(rep.objective.mean);

    // ---- conditions 2 and 3: pathwise over the whole ensemble ----
    std::vector<std::vector<double>> c2(nf, std::vector<double>(all_paths, 0.0));
    std::vector<double> c3(all_paths, 0.0);
    std::vector<unsigned char> vio(all_paths, 0);
    std::vector<std::uint32_t> sup_cnt(all_paths, 0);

    parallel_for(all_paths, [&](std::size_t begin, std::size_t end) {
        std::vector<double> suff_r(nf);
        std::vector<const double*> nu(nf);
        for (std::size_t p = begin; p < end; ++p) {
            const double* x = paths.shock.row(p);
            const double* th = paths.theta.row(p);
            for (std::size_t i = 0; i < nf; ++i) nu[i] = plan.firms[i].row(p);
            std::size_t ns = static_cast<std::size_t>(n);
            for (std::size_t i = 0; i < nf; ++i) {
                if (ctx.quad)
                    suff_r[i] = ctx.disc[ns] * (nu[i][ns] - x[ns]);
                else
                    suff_r[i] = ctx.disc[ns] *
                                std::pow(x[ns] / nu[i][ns], sc.firms[i].alpha) / sc.D[i];
            }
            double suff_l = 0.0;
            double acc3 = 0.0;
            std::uint32_t sup = 0;
            unsigned char bad = 0;
            for (int k = n - 1; k >= 0; --k) {
                std::size_t ks = static_cast<std::size_t>(k);
                suff_l += ctx.wtilde * density.at(p, k);
                for (std::size_t i = 0; i < nf; ++i) {
                    if (ctx.quad)
                        suff_r[i] += ctx.delta * ctx.masses[ks] * (nu[i][ks + 1] - x[ks]);
                    else
                        suff_r[i] += ctx.masses[ks] *
                                     std::pow(x[ks] / nu[i][ks + 1], sc.firms[i].alpha);
                    double gap = suff_r[i] - (ctx.quad ? 0.0 : ctx.disc[ks]) - suff_l;
                    c2[i][p] += gap * (nu[i][ks + 1] - nu[i][ks]);
                }
                if (density.on_support(p, k)) {
                    double slack = th[ks];
                    for (std::size_t i = 0; i < nf; ++i) slack -= nu[i][ks + 1];
                    acc3 += slack * ctx.wtilde * density.at(p, k);
                    ++sup;
                    if (slack != 0.0) bad = 1;
                }
            }
            c3[p] = acc3;
            sup_cnt[p] = sup;
            vio[p] = bad;
        }
    });

    for (std::size_t p = 0; p < all_paths; ++p) {
        rep.support_nodes += sup_cnt[p];
        rep.containment_violations += vio[p];
    }
    for (std::size_t i = 0; i < nf; ++i) {
        KktEntry e;
        char name[32];
        std::snprintf(name, sizeof name, "firm %zu", i + 1);
        e.name = name;
        e.estimate = reduce_estimate(c2[i]);
        e.tolerance = tol;
        e.pass = std::fabs(e.estimate.mean) <= tol * e.estimate.std_error &&
                 std::fabs(e.estimate.mean) <= floor;
        rep.condition2.push_back(e);
    }
    {
        KktEntry e;
        e.name = "complementarity";
        e.estimate = reduce_estimate(c3);
        e.tolerance = tol;
        e.pass = std::fabs(e.estimate.mean) <= tol * e.estimate.std_error &&
                 std::fabs(e.estimate.mean) <= floor && rep.containment_violations == 0;
        rep.condition3 = e;
    }

    // ---- condition 1: deterministic times, then the crossing families ----
    std::size_t p1 = std::min<std::size_t>(budget.outer_paths, all_paths);
    std::size_t slot_idx = 0;

    auto firm_label = [&](const std::string& base, std::size_t i) {
        if (nf == 1) return base;
        char suffix[24];
        std::snprintf(suffix, sizeof suffix, ", firm %zu", i + 1);
        return base + suffix;
    };
    auto push_entries = [&](const std::string& label, double tau,
                            const std::vector<std::vector<double>>& per_firm) {
        for (std::size_t i = 0; i < nf; ++i) {
            KktEntry e;
            e.name = firm_label(label, i);
            e.tau = tau;
            e.estimate = reduce_estimate(per_firm[i]);
            e.tolerance = tol;
            e.pass = orient * e.estimate.mean <= tol * e.estimate.std_error;
            rep.condition1.push_back(e);
        }
    };

    // one nested sweep over the outer paths; idx[p] < 0 means censored
    auto run_slot = [&](const std::vector<int>& idx, const std::string& label, double tau) {
        std::vector<std::vector<double>> per_firm(nf, std::vector<double>(p1, 0.0));
        std::uint64_t slot_base = slot_idx++ * p1;
        parallel_for(p1, [&](std::size_t begin, std::size_t end) {
            std::vector<double> out, cap0(nf), aux0(nf), cens(nf);
            for (std::size_t p = begin; p < end; ++p) {
                int a = idx[p];
                if (a < 0 || a >= n) {
                    censored_gaps(ctx, paths.shock, p, cens);
                    for (std::size_t i = 0; i < nf; ++i) per_firm[i][p] = cens[i];
                    continue;
                }
                // the capacity entering cell a; the inner law applies the
                // cell-a decision itself, so anything beyond node a (in
                // particular the cell-a supremum baked into at(p, a + 1))
                // must not leak into the conditioning state
                for (std::size_t i = 0; i < nf; ++i) {
                    cap0[i] = plan.firms[i].at(p, a);
                    aux0[i] = std::max(plan.y[i], cap0[i] - ctx.bump);
                }
                state_gaps(ctx, a, paths.shock.at(p, a), cap0.data(), aux0.data(),
                           (slot_base + p) * ctx.inner, out);
                for (std::size_t i = 0; i < nf; ++i) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < ctx.inner; ++j) s += out[i * ctx.inner + j];
                    per_firm[i][p] = s / static_cast<double>(ctx.inner);
                }
            }
        });
        push_entries(label, tau, per_firm);
    };

    for (double tau : budget.taus) {
        int a = static_cast<int>(std::llround(tau / dt));
        if (a < 0 || a > n || std::fabs(grid.node(a) - tau) > 1e-9 * std::max(1.0, grid.t_max))
            throw std::invalid_argument(
                "kkt_report: every tau must be a grid node in [0, t_max]");
        char label[32];
        std::snprintf(label, sizeof label, "t=%g", grid.node(a));
        if (a == 0) {
            // F_0 is trivial: one conditional estimate, SE from the inner sample
            std::vector<double> out, cap0(nf), aux0(nf);
            for (std::size_t i = 0; i < nf; ++i) {
                cap0[i] = plan.y[i];
                aux0[i] = plan.y[i];
            }
            state_gaps(ctx, 0, paths.shock.at(0, 0), cap0.data(), aux0.data(),
                       slot_idx++ * p1 * ctx.inner, out);
            for (std::size_t i = 0; i < nf; ++i) {
                std::vector<double> slice(out.begin() + static_cast<std::ptrdiff_t>(i * ctx.inner),
                                          out.begin() +
                                              static_cast<std::ptrdiff_t>((i + 1) * ctx.inner));
                KktEntry e;
                e.name = firm_label(label, i);
                e.tau = 0.0;
                e.estimate = reduce_estimate(slice);
                e.tolerance = tol;
                e.pass = orient * e.estimate.mean <= tol * e.estimate.std_error;
                rep.condition1.push_back(e);
            }
        } else {
            run_slot(std::vector<int>(p1, a), label, grid.node(a));
        }
    }

    // first crossing of the base capacity over the plan (the optimal plan
    // turns this into the fuel crossing) and over the fuel itself
    std::vector<int> sig(p1, -1), rho(p1, -1);
    parallel_for(p1, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const double* la = paths.l_aggregate.row(p);
            const double* th = paths.theta.row(p);
            for (int k = 0; k < n; ++k) {
                std::size_t ks = static_cast<std::size_t>(k);
                double planned = 0.0;
                for (std::size_t i = 0; i < nf; ++i) planned += plan.firms[i].at(p, k + 1);
                if (sig[p] < 0 && la[ks] > planned) sig[p] = k;
                if (rho[p] < 0 && la[ks] > th[ks + 1]) rho[p] = k;
                if (sig[p] >= 0 && rho[p] >= 0) break;
            }
        }
    });
    double no_tau = std::numeric_limits<double>::quiet_NaN();
    if (sig == rho) {
        run_slot(sig, "crossing", no_tau);
    } else {
        run_slot(sig, "crossing-plan", no_tau);
        run_slot(rho, "crossing-fuel", no_tau);
    }

    rep.condition1_pass = true;
    for (const KktEntry& e : rep.condition1) rep.condition1_pass = rep.condition1_pass && e.pass;
    rep.condition2_pass = true;
    for (const KktEntry& e : rep.condition2) rep.condition2_pass = rep.condition2_pass && e.pass;
    rep.condition3_pass = rep.condition3.pass;
    rep.verdict = rep.condition1_pass && rep.condition2_pass && rep.condition3_pass;
    return rep;
}

}  // namespace fuel
