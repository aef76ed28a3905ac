#pragma once

#include <cstddef>
#include <vector>

#include "fuel/ensemble.hpp"

namespace fuel {

// Cumulative investment, one ensemble per firm over a shared grid.  Node k
// holds nu(t_k) under the left-continuity convention: increments are jumps
// attributed at node times, so a plan that moves at time 0+ still shows
// nu(0) = y at node 0 and the jump lands at node 1.
struct InvestmentPlan {
    std::vector<double> y;            // initial capacity per firm
    std::vector<PathEnsemble> firms;  // shared grid and path count

    std::size_t n_firms() const { return firms.size(); }
    std::size_t n_paths() const { return firms.front().n_paths; }
    const TimeGrid& grid() const { return firms.front().grid; }
};

struct AllocationWeights {
    std::vector<double> beta;  // each in (0,1]; the constructor makes the
                               // components sum to 1.0 exactly, the last one
                               // absorbing the division rounding
};

AllocationWeights allocation_weights(const std::vector<double>& k);

/// Per-firm caps beta_i * theta; the last cap is what remains of theta after
/// peeling the others off in index order, so that peel ends at exactly 0.0
/// and the left-to-right sum never exceeds theta.  This is the splitter
/// behind nfirm_policy; plan builders that must respect the same exact
/// aggregate ceiling share it.  caps must hold beta.beta.size() entries.
void fuel_shares(const AllocationWeights& beta, double theta, double* caps);

// First-passage node indices per path; `never` means no crossing before
// t_max.  A crossing tests the strict inequality l(t_k) > theta(t_{k+1});
// at the final node theta(t_n) itself stands in for the unavailable right
// limit and any verdict made there is marked horizon-censored.
struct HittingTimes {
    static constexpr int never = -1;
    int from_index = 0;
    std::vector<int> aggregate;           // inf{k >= from : l(t_k) > theta(t_{k+1})}
    std::vector<int> simultaneous;        // all firms cross their shares at once; empty
                                          // unless per-firm inputs were supplied
    std::vector<unsigned char> censored;  // verdict decided at the final node
    std::size_t disagreements = 0;        // paths where the two indices differ
};

struct AdmissibilityReport {
    double max_violation = 0.0;  // max over paths and nodes of (sum_i nu_i - theta)^+
    std::size_t violation_path = 0;
    int violation_node = -1;
    std::size_t monotonicity_breaks = 0;  // strictly decreasing steps, all firms
    std::size_t first_break_firm = 0;
    std::size_t first_break_path = 0;
    int first_break_node = -1;
    std::size_t initial_mismatches = 0;  // node-0 entries differing from y

    bool admissible() const {
        return max_violation == 0.0 && monotonicity_breaks == 0 && initial_mismatches == 0;
    }
};

/// Single-firm reflection policy: node k carries
/// max(y, max_{j<k} min(l_j, theta_j)), so the plan reacts to strictly prior
/// information and node 0 equals y.
InvestmentPlan running_sup_policy(const PathEnsemble& l, const PathEnsemble& theta, double y);

/// Per-firm reflection against the allocated share beta_i * theta.  Requires
/// sum(y) < theta(0) and each y_i within its time-zero share (a firm born
/// above its share would pin the aggregate over theta once the others fill
/// theirs).  The per-node caps split theta exactly, so a node where every
/// firm binds puts the aggregate exactly on the fuel level, and the
/// aggregate never exceeds theta, both without tolerance.
InvestmentPlan nfirm_policy(const std::vector<PathEnsemble>& l, const AllocationWeights& beta,
                            const PathEnsemble& theta, const std::vector<double>& y);

/// Constraint audit: fuel excess, monotonicity, and initial values.  The
/// report carries the verdict; nothing throws.
AdmissibilityReport admissibility_report(const InvestmentPlan& plan, const PathEnsemble& theta);

/// Aggregate and (optionally) simultaneous per-firm first-passage indices
/// from a given grid-node time.  Pass weights and per-firm base capacities
/// together to get the simultaneous family; the report counts paths where the
/// two disagree instead of assuming they coincide.
HittingTimes hitting_times(const PathEnsemble& l_agg, const PathEnsemble& theta, double from,
                           const AllocationWeights* weights = nullptr,
                           const std::vector<PathEnsemble>* l_each = nullptr);

}  // namespace fuel
