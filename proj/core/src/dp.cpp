#include "fuel/dp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <variant>

#include "fuel/errors.hpp"
#include "fuel/functional.hpp"
#include "fuel/parallel.hpp"

namespace fuel {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

}  // namespace

Lattice build_lattice(const ShockModel& model, const TimeGrid& grid) {
    validate(model);
    if (grid.n_steps < 1) throw std::invalid_argument("build_lattice: grid needs at least 1 step");
    Lattice lat;
    lat.grid = grid;
    lat.model = model;
    double dt = grid.dt();
    std::size_t n = static_cast<std::size_t>(grid.n_steps);

    if (const auto* g = std::get_if<GeometricBrownian>(&model)) {
        if (g->sigma == 0.0) {
            lat.degenerate = true;
            lat.p = 1.0;
            lat.nodes.resize(n + 1);
            for (std::size_t k = 0; k <= n; ++k)
                lat.nodes[k] = {g->x0 * std::exp(g->mu * grid.node(static_cast<int>(k)))};
            return lat;
        }
        double step = g->sigma * std::sqrt(dt);
        double u = std::exp(step), d = std::exp(-step);
        double p = (std::exp(g->mu * dt) - d) / (u - d);
        if (!(p > 0.0 && p < 1.0)) {
            char msg[160];
            std::snprintf(msg, sizeof msg,
                          "build_lattice: step probability %.6g leaves (0,1); "
                          "need |mu| sqrt(dt) < sigma, so increase n_steps",
                          p);
            throw unstable_discretization(msg);
        }
        lat.p = p;
        lat.nodes.resize(n + 1);
        for (std::size_t k = 0; k <= n; ++k) {
            lat.nodes[k].resize(k + 1);
            for (std::size_t j = 0; j <= k; ++j)
                lat.nodes[k][j] =
                    g->x0 * std::exp(step * (2.0 * static_cast<double>(j) -
                                             static_cast<double>(k)));
        }
        return lat;
    }

    const auto& bm = std::get<ArithmeticBrownian>(model);
    double step = std::sqrt(dt);
    lat.p = 0.5;
    lat.nodes.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        lat.nodes[k].resize(k + 1);
        for (std::size_t j = 0; j <= k; ++j)
            lat.nodes[k][j] =
                bm.w0 + step * (2.0 * static_cast<double>(j) - static_cast<double>(k));
    }
    return lat;
}

Lattice degenerate_lattice(const TimeGrid& grid, double value) {
    if (grid.n_steps < 1)
        throw std::invalid_argument("degenerate_lattice: grid needs at least 1 step");
    Lattice lat;
    lat.grid = grid;
    lat.model = ArithmeticBrownian{value};
    lat.degenerate = true;
    lat.p = 1.0;
    lat.nodes.assign(static_cast<std::size_t>(grid.n_steps) + 1, {value});
    return lat;
}

double lattice_mean(const Lattice& lat, std::size_t step) {
    if (step >= lat.nodes.size()) throw std::invalid_argument("lattice_mean: step out of range");
    std::vector<double> pr{1.0};
    for (std::size_t k = 0; k < step; ++k) {
        std::vector<double> next(lat.width(k + 1), 0.0);
        for (std::size_t j = 0; j < pr.size(); ++j) {
            if (lat.degenerate) {
                next[0] += pr[j];
            } else {
                next[j] += pr[j] * (1.0 - lat.p);
                next[j + 1] += pr[j] * lat.p;
            }
        }
        pr = std::move(next);
    }
    double s = 0.0;
    for (std::size_t j = 0; j < pr.size(); ++j) s += pr[j] * lat.value(step, j);
    return s;
}

FuelGrid make_fuel_grid(const std::vector<double>& y, double theta_max, std::size_t m) {
    if (y.empty() || y.size() > 2)
        throw std::invalid_argument("make_fuel_grid: one or two firms");
    if (m < 2) throw std::invalid_argument("make_fuel_grid: need at least 2 levels");
    double total = 0.0;
    for (double yi : y) {
        if (!(yi >= 0.0)) throw std::invalid_argument("make_fuel_grid: y must be nonnegative");
        total += yi;
    }
    if (!(theta_max > total))
        throw infeasible_initialization(
            "make_fuel_grid: theta_max leaves no headroom above the initial capacities");
    FuelGrid fg;
    double head = theta_max - total;
    for (double yi : y) {
        std::vector<double> lv(m);
        double top = yi + head;
        for (std::size_t f = 0; f < m; ++f) {
            double s = static_cast<double>(f) / static_cast<double>(m - 1);
            lv[f] = yi * (1.0 - s) + top * s;  // endpoint-exact
        }
        fg.levels.push_back(std::move(lv));
    }
    return fg;
}

std::size_t PolicyTable::fuel_states() const {
    std::size_t s = 1;
    for (std::size_t d : fuel_dim) s *= d;
    return s;
}

std::uint16_t PolicyTable::move(std::size_t step, std::size_t node, std::size_t fs,
                                std::size_t firm) const {
    std::size_t state = base[step] + node * fuel_states() + fs;
    return moves[state * n_firms + firm];
}

namespace {

// Validated, precomputed inputs of one solve: per-node discounts and fuel
// caps, per-firm level powers for the operating profit, and the tail
// denominators.  Everything the induction and the forward evaluation share.
struct DpSetup {
    const Lattice* lat = nullptr;
    std::size_t n = 0;
    std::size_t nf = 1;
    std::size_t m1 = 1, m2 = 1, fs = 1;
    bool quad = false;
    double cost = 1.0;  // unit investment cost; the tracking case has none
    double delta = 0.0;
    double dt = 0.0;
    std::vector<double> disc;
    std::vector<double> theta;
    std::vector<double> alpha;
    std::vector<double> dden;
    std::vector<std::vector<double>> pw;  // level^(1-alpha)/(1-alpha) per firm
    double tail_var = 0.0;                // tracking-case terminal variance value

    const std::vector<double>& lv(std::size_t i) const { return levels->at(i); }
    const std::vector<std::vector<double>>* levels = nullptr;

    std::size_t width(std::size_t k) const { return lat->width(k); }
    double up_p() const { return lat->degenerate ? 1.0 : lat->p; }
    std::size_t up_child(std::size_t j) const { return lat->degenerate ? 0 : j + 1; }
    std::size_t dn_child(std::size_t j) const { return lat->degenerate ? 0 : j; }

    double reward(std::size_t k, double x, std::size_t f1, std::size_t f2) const {
        if (quad) {
            double d = x - lv(0)[f1];
            return -disc[k] * delta * 0.5 * d * d * dt;
        }
        double r = std::pow(x, alpha[0]) * pw[0][f1];
        if (nf == 2) r += std::pow(x, alpha[1]) * pw[1][f2];
        return disc[k] * r * dt;
    }
    double tail(double x, std::size_t f1, std::size_t f2) const {
        if (quad) {
            double d = x - lv(0)[f1];
            return -disc[n] * (0.5 * d * d + tail_var);
        }
        double r = std::pow(x, alpha[0]) * pw[0][f1] / dden[0];
        if (nf == 2) r += std::pow(x, alpha[1]) * pw[1][f2] / dden[1];
        return disc[n] * r;
    }
};

DpSetup make_setup(const Lattice& lat, const FuelModel& fuel,
                   const std::vector<ProfitModel>& profit, const std::vector<double>& y,
                   const FuelGrid& fg, double delta) {
    validate(lat.model);
    validate(fuel);
    validate(Discount{delta});
    if (lat.grid.n_steps < 1 || lat.nodes.size() != static_cast<std::size_t>(lat.grid.n_steps) + 1)
        throw std::invalid_argument("dp_solve: lattice and grid disagree");
    for (std::size_t k = 0; k < lat.nodes.size(); ++k) {
        std::size_t want = lat.degenerate ? 1 : k + 1;
        if (lat.nodes[k].size() != want)
            throw std::invalid_argument("dp_solve: lattice column sizes are wrong");
    }
    if (!lat.degenerate && !(lat.p > 0.0 && lat.p < 1.0))
        throw std::invalid_argument("dp_solve: lattice probability outside (0,1)");
    if (!fuel_is_deterministic(fuel))
        throw unsupported_model("dp_solve: the oracle needs deterministic fuel");
    if (y.empty() || y.size() > 2) throw std::invalid_argument("dp_solve: one or two firms");
    if (profit.size() != y.size())
        throw std::invalid_argument("dp_solve: one profit model per firm required");
    if (fg.levels.size() != y.size())
        throw std::invalid_argument("dp_solve: one fuel-level vector per firm required");

    DpSetup s;
    s.lat = &lat;
    s.n = static_cast<std::size_t>(lat.grid.n_steps);
    s.nf = y.size();
    s.delta = delta;
    s.dt = lat.grid.dt();
    s.levels = &fg.levels;

    int orient = 0;
    for (std::size_t i = 0; i < s.nf; ++i) {
        validate(profit[i]);
        int o = orientation(profit[i]);
        if (orient != 0 && o != orient)
            throw std::invalid_argument("dp_solve: mixed profit orientations");
        orient = o;
    }
    s.quad = orient < 0;
    if (s.quad) {
        if (s.nf != 1)
            throw std::invalid_argument("dp_solve: the tracking objective is single-firm");
        if (std::holds_alternative<GeometricBrownian>(lat.model) && !lat.degenerate)
            throw std::invalid_argument(
                "dp_solve: the tracking objective needs the Brownian or a degenerate lattice");
        s.cost = 0.0;
        s.tail_var = lat.degenerate ? 0.0 : 0.5 / delta;
    } else {
        const auto* g = std::get_if<GeometricBrownian>(&lat.model);
        if (!g)
            throw std::invalid_argument("dp_solve: operating profit needs the geometric shock");
        double sigma_eff = lat.degenerate ? 0.0 : g->sigma;
        for (std::size_t i = 0; i < s.nf; ++i) {
            s.alpha.push_back(std::get<CobbDouglas>(profit[i]).alpha);
            s.dden.push_back(power_moment_denominator(s.alpha[i], g->mu, sigma_eff, delta));
        }
    }

    double ytotal = 0.0;
    for (std::size_t i = 0; i < s.nf; ++i) {
        const auto& lv = fg.levels[i];
        if (lv.size() < 1 || lv.size() > 65535)
            throw std::invalid_argument("dp_solve: fuel levels per firm must fit in [1, 65535]");
        if (lv.front() != y[i])
            throw std::invalid_argument(
                "dp_solve: the first fuel level must equal the initial capacity");
        for (std::size_t f = 1; f < lv.size(); ++f)
            if (!(lv[f] > lv[f - 1]))
                throw std::invalid_argument("dp_solve: fuel levels must increase strictly");
        if (!(lv.front() >= 0.0))
            throw std::invalid_argument("dp_solve: capacities must be nonnegative");
        ytotal += y[i];
    }
    s.m1 = fg.levels[0].size();
    s.m2 = s.nf == 2 ? fg.levels[1].size() : 1;
    s.fs = s.m1 * s.m2;

    s.disc.resize(s.n + 1);
    s.theta.resize(s.n + 1);
    for (std::size_t k = 0; k <= s.n; ++k) {
        double t = lat.grid.node(static_cast<int>(k));
        s.disc[k] = std::exp(-delta * t);
        s.theta[k] = fuel_at(fuel, t);
    }
    if (!(ytotal <= s.theta[0]))
        throw infeasible_initialization("dp_solve: initial capacities exceed the fuel at t=0");

    if (!s.quad) {
        s.pw.resize(s.nf);
        for (std::size_t i = 0; i < s.nf; ++i) {
            s.pw[i].resize(fg.levels[i].size());
            for (std::size_t f = 0; f < fg.levels[i].size(); ++f)
                s.pw[i][f] = std::pow(fg.levels[i][f], 1.0 - s.alpha[i]) / (1.0 - s.alpha[i]);
        }
    }
    return s;
}

std::size_t policy_states(const DpSetup& s, std::vector<std::size_t>& base) {
    base.assign(s.n + 1, 0);
    for (std::size_t k = 0; k < s.n; ++k) base[k + 1] = base[k] + s.width(k) * s.fs;
    return base[s.n];
}

// Largest level index admissible under `cap`, or npos for none.
std::size_t cap_index(const std::vector<double>& lv, double cap) {
    auto it = std::upper_bound(lv.begin(), lv.end(), cap);
    if (it == lv.begin()) return static_cast<std::size_t>(-1);
    return static_cast<std::size_t>(it - lv.begin()) - 1;
}

}  // namespace

DpResult dp_solve(const Lattice& lat, const FuelModel& fuel,
                  const std::vector<ProfitModel>& profit, const std::vector<double>& y,
                  const FuelGrid& fg, double delta, std::size_t memory_budget) {
    DpSetup s = make_setup(lat, fuel, profit, y, fg, delta);

    DpResult res;
    res.policy.n_firms = s.nf;
    res.policy.fuel_dim = {s.m1};
    if (s.nf == 2) res.policy.fuel_dim.push_back(s.m2);
    std::size_t states = policy_states(s, res.policy.base);

    std::size_t max_width = s.lat->degenerate ? 1 : s.n + 1;
    std::size_t need = states * s.nf * sizeof(std::uint16_t) +
                       2 * max_width * s.fs * sizeof(double);
    if (need > memory_budget) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "dp_solve: state space needs about %.1f MiB, budget %.1f MiB",
                      static_cast<double>(need) / (1024.0 * 1024.0),
                      static_cast<double>(memory_budget) / (1024.0 * 1024.0));
        throw budget_exceeded(msg);
    }
    res.policy.moves.assign(states * s.nf, 0);

    std::vector<double> vnext(s.width(s.n) * s.fs), vcur;
    parallel_for(s.width(s.n), [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            double x = s.lat->value(s.n, j);
            for (std::size_t f1 = 0; f1 < s.m1; ++f1)
                for (std::size_t f2 = 0; f2 < s.m2; ++f2)
                    vnext[j * s.fs + f1 * s.m2 + f2] = s.tail(x, f1, f2);
        }
    });

    for (std::size_t k = s.n; k-- > 0;) {
        double cap = s.theta[k + 1];
        double pu = s.up_p(), pd = 1.0 - pu;
        vcur.assign(s.width(k) * s.fs, 0.0);
        std::uint16_t* pol = res.policy.moves.data() + res.policy.base[k] * s.nf;

        parallel_for(s.width(k), [&](std::size_t begin, std::size_t end) {
            std::vector<double> best(s.m2);
            std::vector<std::size_t> b1(s.m2), b2(s.m2), arg1(s.m1);
            std::vector<double> m1max(s.m1);
            for (std::size_t j = begin; j < end; ++j) {
                double x = s.lat->value(k, j);
                const double* vup = vnext.data() + s.up_child(j) * s.fs;
                const double* vdn = vnext.data() + s.dn_child(j) * s.fs;
                double* vrow = vcur.data() + j * s.fs;
                std::uint16_t* prow = pol + j * s.fs * s.nf;

                if (s.nf == 1) {
                    std::size_t gmax = cap_index(s.lv(0), cap);
                    // suffix maxima of Q(g) - cost * disc_k * level_g; ties
                    // resolve to the smallest landing level
                    for (std::size_t g = gmax + 1; g-- > 0;) {
                        double q = pu * vup[g] + pd * vdn[g];
                        double u = q - s.cost * s.disc[k] * s.lv(0)[g];
                        if (g == gmax || u >= m1max[g + 1]) {
                            m1max[g] = u;
                            arg1[g] = g;
                        } else {
                            m1max[g] = m1max[g + 1];
                            arg1[g] = arg1[g + 1];
                        }
                    }
                    for (std::size_t f = 0; f < s.m1; ++f) {
                        if (f <= gmax) {
                            vrow[f] = s.reward(k, x, f, 0) + s.cost * s.disc[k] * s.lv(0)[f] +
                                      m1max[f];
                            prow[f] = static_cast<std::uint16_t>(arg1[f] - f);
                        } else {
                            vrow[f] = neg_inf;  // unreachable: above the next cap
                            prow[f] = 0;
                        }
                    }
                    continue;
                }

                // two firms: suffix maxima over the staircase of admissible
                // landing pairs, one row of g1 at a time from the top
                std::fill(best.begin(), best.end(), neg_inf);
                for (std::size_t g1 = s.m1; g1-- > 0;) {
                    double l1 = s.lv(0)[g1];
                    bool row_ok = l1 + s.lv(1)[0] <= cap;
                    std::size_t g2max = row_ok ? cap_index(s.lv(1), cap - l1) : 0;
                    double rs = neg_inf;
                    std::size_t ra = 0;
                    for (std::size_t g2 = row_ok ? g2max + 1 : 0; g2-- > 0;) {
                        std::size_t g = g1 * s.m2 + g2;
                        double q = pu * vup[g] + pd * vdn[g];
                        double u = q - s.cost * s.disc[k] * (l1 + s.lv(1)[g2]);
                        if (u >= rs) {
                            rs = u;
                            ra = g2;
                        }
                        if (rs >= best[g2]) {
                            best[g2] = rs;
                            b1[g2] = g1;
                            b2[g2] = ra;
                        }
                    }
                    double xa1 = std::pow(x, s.alpha[0]) * s.dt * s.disc[k];
                    double xa2 = std::pow(x, s.alpha[1]) * s.dt * s.disc[k];
                    for (std::size_t f2 = 0; f2 < s.m2; ++f2) {
                        std::size_t f = g1 * s.m2 + f2;
                        if (row_ok && f2 <= g2max) {
                            double reward = xa1 * s.pw[0][g1] + xa2 * s.pw[1][f2];
                            vrow[f] = reward +
                                      s.cost * s.disc[k] * (l1 + s.lv(1)[f2]) + best[f2];
                            prow[f * 2] = static_cast<std::uint16_t>(b1[f2] - g1);
                            prow[f * 2 + 1] = static_cast<std::uint16_t>(b2[f2] - f2);
                        } else {
                            vrow[f] = neg_inf;
                            prow[f * 2] = 0;
                            prow[f * 2 + 1] = 0;
                        }
                    }
                }
            }
        });
        std::swap(vcur, vnext);
    }

    double signed_value = vnext[0];  // node 0, fuel state (0, 0)
    res.value = s.quad ? -signed_value : signed_value;
    return res;
}

DpResult dp_solve(const Lattice& lat, const FuelModel& fuel, const ProfitModel& profit,
                  const std::vector<double>& y, const FuelGrid& fg, double delta,
                  std::size_t memory_budget) {
    return dp_solve(lat, fuel, std::vector<ProfitModel>(y.size(), profit), y, fg, delta,
                    memory_budget);
}

double lattice_policy_value(const Lattice& lat, const FuelModel& fuel,
                            const std::vector<ProfitModel>& profit, const std::vector<double>& y,
                            const FuelGrid& fg, double delta, const PolicyTable& policy) {
    DpSetup s = make_setup(lat, fuel, profit, y, fg, delta);
    if (policy.n_firms != s.nf || policy.fuel_states() != s.fs ||
        policy.base.size() != s.n + 1 || policy.moves.size() != policy.base[s.n] * s.nf)
        throw std::invalid_argument("lattice_policy_value: policy shape mismatch");

    std::vector<double> dist(s.width(0) * s.fs, 0.0), next;
    dist[0] = 1.0;  // node 0, fuel state (0, 0): the initial capacities
    double acc = 0.0;
    double pu = s.up_p(), pd = 1.0 - pu;

    for (std::size_t k = 0; k < s.n; ++k) {
        double cap = s.theta[k + 1];
        next.assign(s.width(k + 1) * s.fs, 0.0);
        for (std::size_t j = 0; j < s.width(k); ++j) {
            double x = s.lat->value(k, j);
            for (std::size_t f1 = 0; f1 < s.m1; ++f1)
                for (std::size_t f2 = 0; f2 < s.m2; ++f2) {
                    std::size_t fs = f1 * s.m2 + f2;
                    double q = dist[j * s.fs + fs];
                    if (q == 0.0) continue;
                    std::size_t a1 = policy.move(k, j, fs, 0);
                    std::size_t a2 = s.nf == 2 ? policy.move(k, j, fs, 1) : 0;
                    std::size_t g1 = f1 + a1, g2 = f2 + a2;
                    if (g1 >= s.m1 || (s.nf == 2 && g2 >= s.m2))
                        throw std::invalid_argument(
                            "lattice_policy_value: policy walks off the fuel grid");
                    double landed = s.lv(0)[g1] + (s.nf == 2 ? s.lv(1)[g2] : 0.0);
                    if (landed > cap)
                        throw std::invalid_argument(
                            "lattice_policy_value: policy violates the fuel ceiling");
                    double spent = landed - (s.lv(0)[f1] + (s.nf == 2 ? s.lv(1)[f2] : 0.0));
                    acc += q * (s.reward(k, x, f1, f2) - s.cost * s.disc[k] * spent);
                    std::size_t gs = g1 * s.m2 + g2;
                    if (s.lat->degenerate) {
                        next[gs] += q;
                    } else {
                        next[(j + 1) * s.fs + gs] += q * pu;
                        next[j * s.fs + gs] += q * pd;
                    }
                }
        }
        dist = std::move(next);
    }
    for (std::size_t j = 0; j < s.width(s.n); ++j) {
        double x = s.lat->value(s.n, j);
        for (std::size_t f1 = 0; f1 < s.m1; ++f1)
            for (std::size_t f2 = 0; f2 < s.m2; ++f2) {
                double q = dist[j * s.fs + f1 * s.m2 + f2];
                if (q != 0.0) acc += q * s.tail(x, f1, f2);
            }
    }
    return s.quad ? -acc : acc;
}

void write_policy_csv(const DpResult& dp, const Lattice& lat, std::ostream& out) {
    const PolicyTable& pt = dp.policy;
    std::size_t n = pt.base.size() - 1;
    std::size_t fs = pt.fuel_states();
    if (lat.nodes.size() != n + 1)
        throw std::invalid_argument("write_policy_csv: lattice and policy disagree");
    out << (pt.n_firms == 1 ? "step,node,fuel,move\n" : "step,node,fuel1,fuel2,move1,move2\n");
    char line[128];
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t width = (pt.base[k + 1] - pt.base[k]) / fs;
        for (std::size_t j = 0; j < width; ++j)
            for (std::size_t f = 0; f < fs; ++f) {
                if (pt.n_firms == 1) {
                    std::uint16_t a = pt.move(k, j, f, 0);
                    if (a == 0) continue;
                    std::snprintf(line, sizeof line, "%zu,%zu,%zu,%u\n", k, j, f,
                                  static_cast<unsigned>(a));
                } else {
                    std::uint16_t a1 = pt.move(k, j, f, 0), a2 = pt.move(k, j, f, 1);
                    if (a1 == 0 && a2 == 0) continue;
                    std::snprintf(line, sizeof line, "%zu,%zu,%zu,%zu,%u,%u\n", k, j,
                                  f / pt.fuel_dim[1], f % pt.fuel_dim[1],
                                  static_cast<unsigned>(a1), static_cast<unsigned>(a2));
                }
                out << line;
            }
    }
}

void write_policy_csv(const DpResult& dp, const Lattice& lat, const std::string& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("write_policy_csv: cannot open " + file);
    write_policy_csv(dp, lat, out);
}

InvestmentPlan project_plan(const InvestmentPlan& plan, const FuelGrid& fg) {
    if (fg.levels.size() != plan.n_firms())
        throw std::invalid_argument("project_plan: one fuel-level vector per firm required");
    InvestmentPlan out = plan;
    for (std::size_t i = 0; i < plan.n_firms(); ++i) {
        const auto& lv = fg.levels[i];
        for (double& v : out.firms[i].values) {
            auto it = std::upper_bound(lv.begin(), lv.end(), v);
            v = it == lv.begin() ? lv.front() : *(it - 1);
        }
    }
    return out;
}

OracleGap oracle_gap(const Scenario& sc, const OracleGapParams& params, Perturbation perturb) {
    if (!fuel_is_deterministic(sc.fuel))
        throw unsupported_model("oracle_gap: the oracle needs deterministic fuel");
    std::vector<double> y;
    std::vector<ProfitModel> profit;
    for (std::size_t i = 0; i < sc.firms.size(); ++i) {
        y.push_back(sc.firms[i].y);
        profit.push_back(firm_profit(sc, i));
    }
    double theta_max = fuel_at(sc.fuel, params.grid.t_max);
    FuelGrid fg = make_fuel_grid(y, theta_max, params.fuel_levels);
    Lattice lat = build_lattice(sc.shock, params.grid);

    OracleGap res;
    res.dp_value = dp_solve(lat, sc.fuel, profit, y, fg, sc.delta, params.memory_budget).value;

    ScenarioPaths paths = simulate_scenario(sc, params.grid, params.mc_paths, params.seed);
    InvestmentPlan plan = project_plan(perturbed_plan(sc, paths, perturb), fg);
    res.policy_value = plan_objective(sc, paths, plan);

    int orient = scenario_orientation(sc);
    res.gap = orient * (res.dp_value - res.policy_value.mean);
    double se = res.policy_value.std_error;
    res.pass = res.gap <= std::max(params.rel_tol * std::fabs(res.dp_value), 3.0 * se) &&
               res.gap >= -3.0 * se;
    return res;
}

}  // namespace fuel
