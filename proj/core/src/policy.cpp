#include "fuel/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fuel/errors.hpp"
#include "fuel/parallel.hpp"

namespace fuel {

namespace {

void require_same_shape(const PathEnsemble& a, const PathEnsemble& b, const char* who) {
    if (a.n_paths != b.n_paths || a.grid.n_steps != b.grid.n_steps ||
        a.grid.t_max != b.grid.t_max)
        throw std::invalid_argument(std::string(who) +
                                    ": ensembles disagree on grid or path count");
}

int time_to_node(const TimeGrid& grid, double t, const char* who) {
    double pos = t / grid.dt();
    int idx = static_cast<int>(std::lround(pos));
    if (idx < 0 || idx > grid.n_steps || std::fabs(pos - idx) > 1e-9)
        throw std::invalid_argument(std::string(who) + ": time " + std::to_string(t) +
                                    " is not a grid node");
    return idx;
}

// Nudges `last` until the left-to-right sum head + last rounds to `target`
// exactly.  The head is the rounded sum of the other components; the nudge is
// at most a few ulps, and it exists because stepping `last` by one ulp moves
// the rounded sum by at most one ulp of the target.
double absorb_rounding(double head, double last, double target) {
    while (head + last > target) last = std::nextafter(last, -1.0);
    while (head + std::nextafter(last, target) <= target) last = std::nextafter(last, target);
    if (head + last != target)
        throw std::logic_error("absorb_rounding: target unreachable");
    return last;
}

// Splits theta into per-firm caps beta_i * theta whose left-to-right sum is
// exactly theta; the last cap absorbs the rounding.  The last cap is the
// literal subtraction theta - head so that peeling the caps off theta in
// index order ends at exactly 0.0; complementarity checks downstream compare
// that residue against zero bitwise.
void split_fuel(const std::vector<double>& beta, double theta, double* caps) {
    std::size_t n = beta.size();
    if (n == 1) {
        caps[0] = theta;
        return;
    }
    double head = 0.0;       // ascending sum, the admissibility grouping
    double residue = theta;  // sequential peel, the complementarity grouping
    for (std::size_t i = 0; i + 1 < n; ++i) {
        caps[i] = beta[i] * theta;
        head += caps[i];
        residue -= caps[i];
    }
    while (head + residue > theta) residue = std::nextafter(residue, -1.0);
    caps[n - 1] = residue;
}

}  // namespace

AllocationWeights allocation_weights(const std::vector<double>& k) {
    if (k.empty()) throw std::invalid_argument("allocation_weights: no firms");
    double total = 0.0;
    for (double v : k) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("allocation_weights: every k must be > 0");
        total += v;
    }
    AllocationWeights w;
    w.beta.reserve(k.size());
    for (double v : k) w.beta.push_back(v / total);
    // The last weight absorbs the division rounding so the components sum to
    // one exactly, not just within tolerance.
    if (w.beta.size() > 1) {
        double head = 0.0;
        for (std::size_t i = 0; i + 1 < w.beta.size(); ++i) head += w.beta[i];
        w.beta.back() = absorb_rounding(head, w.beta.back(), 1.0);
    } else {
        w.beta[0] = 1.0;
    }
    return w;
}

void fuel_shares(const AllocationWeights& beta, double theta, double* caps) {
    if (beta.beta.empty()) throw std::invalid_argument("fuel_shares: no firms");
    split_fuel(beta.beta, theta, caps);
}

InvestmentPlan running_sup_policy(const PathEnsemble& l, const PathEnsemble& theta, double y) {
    require_same_shape(l, theta, "running_sup_policy");
    if (!(y > 0.0)) throw std::invalid_argument("running_sup_policy: y must be > 0");
    InvestmentPlan plan;
    plan.y = {y};
    plan.firms.push_back(PathEnsemble::constant(l.grid, l.n_paths, y));
    PathEnsemble& nu = plan.firms.front();
    std::size_t width = static_cast<std::size_t>(l.grid.n_nodes());
    parallel_for(l.n_paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const double* lp = l.row(p);
            const double* tp = theta.row(p);
            double* np = nu.values.data() + p * width;
            double m = y;
            for (std::size_t k = 1; k < width; ++k) {
                double capped = std::min(lp[k - 1], tp[k - 1]);
                if (capped > m) m = capped;
                np[k] = m;
            }
        }
    });
    return plan;
}

InvestmentPlan nfirm_policy(const std::vector<PathEnsemble>& l, const AllocationWeights& beta,
                            const PathEnsemble& theta, const std::vector<double>& y) {
    if (l.empty()) throw std::invalid_argument("nfirm_policy: no firms");
    if (l.size() != beta.beta.size() || l.size() != y.size())
        throw std::invalid_argument("nfirm_policy: firm counts disagree across l, beta, y");
    for (const auto& li : l) require_same_shape(li, theta, "nfirm_policy");
    double y_total = 0.0;
    for (double yi : y) {
        if (!(yi > 0.0)) throw std::invalid_argument("nfirm_policy: every y must be > 0");
        y_total += yi;
    }
    for (std::size_t p = 0; p < theta.n_paths; ++p)
        if (!(y_total < theta.at(p, 0)))
            throw infeasible_initialization("nfirm_policy: sum of initial capacities " +
                                            std::to_string(y_total) +
                                            " is not below the initial fuel " +
                                            std::to_string(theta.at(p, 0)));
    {
        // The plan never sheds capacity, so a firm starting above its fuel
        // share would pin the aggregate above theta as soon as the others
        // fill theirs.  The optimality result needs each firm inside its
        // share, not just the total inside the fuel.
        std::vector<double> caps0(l.size());
        split_fuel(beta.beta, theta.at(0, 0), caps0.data());
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] > caps0[i])
                throw infeasible_initialization(
                    "nfirm_policy: firm " + std::to_string(i) + " starts at " +
                    std::to_string(y[i]) + ", above its fuel share " + std::to_string(caps0[i]));
    }

    InvestmentPlan plan;
    plan.y = y;
    std::size_t n_firms = l.size();
    std::size_t width = static_cast<std::size_t>(theta.grid.n_nodes());
    for (std::size_t i = 0; i < n_firms; ++i)
        plan.firms.push_back(PathEnsemble::constant(theta.grid, theta.n_paths, y[i]));
    parallel_for(theta.n_paths, [&](std::size_t begin, std::size_t end) {
        std::vector<double> caps(n_firms);
        std::vector<double> m(n_firms);
        std::vector<double> prev(n_firms);
        for (std::size_t p = begin; p < end; ++p) {
            const double* tp = theta.row(p);
            for (std::size_t i = 0; i < n_firms; ++i) m[i] = y[i];
            for (std::size_t k = 1; k < width; ++k) {
                // Caps split theta(t_{k-1}) exactly, so a node where every
                // firm binds puts the aggregate exactly on the fuel level.
                split_fuel(beta.beta, tp[k - 1], caps.data());
                for (std::size_t i = 0; i < n_firms; ++i) {
                    prev[i] = m[i];
                    double capped = std::min(l[i].at(p, k - 1), caps[i]);
                    if (capped > m[i]) m[i] = capped;
                }
                // theta is nondecreasing and the caps sum to the prior fuel
                // level, so the aggregate can only breach theta(t_k) through
                // rounding; pull it back without breaking monotonicity.  The
                // loop re-checks because the subtraction itself re-rounds.
                for (int guard = 0; guard < 8; ++guard) {
                    double total = 0.0;
                    for (std::size_t i = 0; i < n_firms; ++i) total += m[i];
                    if (total <= tp[k]) break;
                    double excess = total - tp[k];
                    for (std::size_t i = n_firms; i-- > 0 && excess > 0.0;) {
                        double take = std::min(excess, m[i] - prev[i]);
                        if (take > 0.0) {
                            m[i] -= take;
                            excess -= take;
                        }
                    }
                }
                for (std::size_t i = 0; i < n_firms; ++i)
                    plan.firms[i].values[p * width + k] = m[i];
            }
        }
    });
    return plan;
}

AdmissibilityReport admissibility_report(const InvestmentPlan& plan, const PathEnsemble& theta) {
    for (const auto& f : plan.firms) require_same_shape(f, theta, "admissibility_report");
    if (plan.y.size() != plan.n_firms())
        throw std::invalid_argument("admissibility_report: y and firm counts disagree");
    AdmissibilityReport rep;
    std::size_t width = static_cast<std::size_t>(theta.grid.n_nodes());
    for (std::size_t p = 0; p < theta.n_paths; ++p) {
        for (std::size_t k = 0; k < width; ++k) {
            double total = 0.0;
            for (const auto& f : plan.firms) total += f.at(p, k);
            double excess = total - theta.at(p, k);
            if (excess > rep.max_violation) {
                rep.max_violation = excess;
                rep.violation_path = p;
                rep.violation_node = static_cast<int>(k);
            }
        }
        for (std::size_t i = 0; i < plan.n_firms(); ++i) {
            const double* row = plan.firms[i].row(p);
            if (row[0] != plan.y[i]) ++rep.initial_mismatches;
            for (std::size_t k = 1; k < width; ++k) {
                if (row[k] < row[k - 1]) {
                    if (rep.monotonicity_breaks == 0) {
                        rep.first_break_firm = i;
                        rep.first_break_path = p;
                        rep.first_break_node = static_cast<int>(k);
                    }
                    ++rep.monotonicity_breaks;
                }
            }
        }
    }
    return rep;
}

HittingTimes hitting_times(const PathEnsemble& l_agg, const PathEnsemble& theta, double from,
                           const AllocationWeights* weights,
                           const std::vector<PathEnsemble>* l_each) {
    require_same_shape(l_agg, theta, "hitting_times");
    if ((weights == nullptr) != (l_each == nullptr))
        throw std::invalid_argument(
            "hitting_times: weights and per-firm capacities must be supplied together");
    if (l_each) {
        if (l_each->size() != weights->beta.size())
            throw std::invalid_argument("hitting_times: firm counts disagree");
        for (const auto& li : *l_each) require_same_shape(li, theta, "hitting_times");
    }
    int from_idx = time_to_node(theta.grid, from, "hitting_times");
    int last = theta.grid.n_steps;

    HittingTimes ht;
    ht.from_index = from_idx;
    ht.aggregate.assign(l_agg.n_paths, HittingTimes::never);
    ht.censored.assign(l_agg.n_paths, 0);
    if (l_each) ht.simultaneous.assign(l_agg.n_paths, HittingTimes::never);

    for (std::size_t p = 0; p < l_agg.n_paths; ++p) {
        const double* lp = l_agg.row(p);
        const double* tp = theta.row(p);
        for (int k = from_idx; k <= last; ++k) {
            // right limit of the fuel; at the horizon fall back to theta(t_n)
            double ahead = tp[k < last ? k + 1 : last];
            if (lp[k] > ahead) {
                ht.aggregate[p] = k;
                if (k == last) ht.censored[p] = 1;
                break;
            }
        }
        if (l_each) {
            for (int k = from_idx; k <= last; ++k) {
                double ahead = tp[k < last ? k + 1 : last];
                bool all = true;
                for (std::size_t i = 0; i < l_each->size(); ++i) {
                    if (!((*l_each)[i].at(p, static_cast<std::size_t>(k)) >
                          weights->beta[i] * ahead)) {
                        all = false;
                        break;
                    }
                }
                if (all) {
                    ht.simultaneous[p] = k;
                    if (k == last) ht.censored[p] = 1;
                    break;
                }
            }
            if (ht.simultaneous[p] != ht.aggregate[p]) ++ht.disagreements;
        }
    }
    return ht;
}

}  // namespace fuel
