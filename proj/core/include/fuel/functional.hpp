#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fuel/estimate.hpp"
#include "fuel/policy.hpp"
#include "fuel/profit.hpp"
#include "fuel/scenario.hpp"

namespace fuel {

struct ProfitBreakdown {
    std::vector<Estimate> per_firm;
    Estimate aggregate;
};

/// Discounted net profit of a plan: per path and firm
///   sum_k e^{-delta t_k} R(X_k, nu_k) dt  -  sum_k e^{-delta t_k} (nu_{k+1} - nu_k),
/// left Riemann for the dt integral, jumps discounted at the jump node.
/// The shock model backs the analytic tail bound (the frozen-plan revenue
/// beyond t_max), which is reported, not added to the mean.  Pass
/// aggregate_per_path to get the per-path aggregate values for paired
/// comparisons under common random numbers.  Rejects cost-oriented profit
/// models; those go through tracking_cost.
ProfitBreakdown net_profit(const InvestmentPlan& plan, const PathEnsemble& shock,
                           const ShockModel& model, const std::vector<ProfitModel>& profit,
                           double delta, std::vector<double>* aggregate_per_path = nullptr);

/// Same profit model for every firm.
ProfitBreakdown net_profit(const InvestmentPlan& plan, const PathEnsemble& shock,
                           const ShockModel& model, const ProfitModel& profit, double delta,
                           std::vector<double>* aggregate_per_path = nullptr);

/// E integral delta e^{-delta s} (W - nu)^2 / 2 ds, left Riemann on the grid.
/// The tail bound is the exact frozen-plan remainder
/// e^{-delta t_max} [(W_n - nu_n)^2/2 + 1/(2 delta)] averaged across paths.
Estimate tracking_cost(const InvestmentPlan& plan, const PathEnsemble& w, double delta,
                       std::vector<double>* per_path = nullptr);

/// The scenario's objective for a plan: aggregate net profit for the
/// maximization cases, tracking cost for the quadratic one.  Paired
/// comparisons read the per-path values.
Estimate plan_objective(const Scenario& sc, const ScenarioPaths& paths, const InvestmentPlan& plan,
                        std::vector<double>* per_path = nullptr);

/// The Markov coordinates a conditional-law simulation restarts from.
struct MarkovState {
    double x = 1.0;            // shock value at t
    double running_cap = 0.1;  // plan level nu(t+)
    double fuel = 1.0;         // fuel level theta(t)
    double aux = 0.0;          // underlying reflection level for the bumped law
};

// How the plan under test extends beyond t.  The closed-form optimum follows
// `reflection`; the built-in perturbations follow the other laws, each still
// Markov in (x, running_cap, fuel).
enum class PlanLaw { reflection, frozen, reflection_bumped, cap_riding };

/// Everything needed to rebuild one firm's plan continuation and the
/// discounted marginal profit along it.
struct PolicyDescription {
    ShockModel shock;
    FuelModel fuel;  // Constant or Affine; anything else is not Markov here
    BaseCapacitySpec base;
    double beta = 1.0;  // share of theta backing this firm's cap
    PlanLaw law = PlanLaw::reflection;
    double bump = 0.0;  // extra level under reflection_bumped
};

/// Nested-MC estimate of the supergradient at time t from a Markov state:
/// simulate mc.n_paths shock continuations, rebuild the plan continuation
/// (bridge-refined within cells), integrate the discounted marginal profit
/// over [t, t + mc.grid.t_max], and subtract e^{-delta t} for the investment
/// cost (the quadratic case has no unit cost, so nothing is subtracted and
/// the sign convention is the subgradient of a cost).  mc.grid spans the
/// remaining horizon; inner_path_base offsets the RNG path ids so nested
/// callers get disjoint draws.  Throws unsupported_model for non-Markov fuel.
Estimate supergradient(double t, const MarkovState& state, const PolicyDescription& policy,
                       const ProfitModel& profit, double delta, const McParams& mc,
                       std::uint64_t inner_path_base = 0);

/// The Snell envelope of the optimal plan's obstacle at a grid time t,
/// estimated through the hitting-time representations: the first passage of
/// the base capacity over the fuel cap is detected cell by cell with bridge
/// maxima, the crossing value is known exactly there, and paths that never
/// cross contribute zero (their mass is the tail bound).  Supported for the
/// three single-firm scenarios; the N-firm case has no closed form here.
Estimate snell_at_optimum(const Scenario& sc, double t, const McParams& mc);

/// Density of the multiplier measure on the grid, with its support mask
/// {aggregate base capacity > theta, both at the node} and orientation (+1
/// when the measure is nonnegative, -1 for the cost case).  The left-node
/// test matches every other dt integrand here; the fuel processes are
/// continuous, so nothing is lost at the right limit.  density includes the
/// discount factor; it is exactly 0 off support.  Throws logic_error if a
/// support value violates the orientation sign (impossible for valid
/// scenarios).
struct MultiplierDensity {
    TimeGrid grid;
    std::size_t n_paths = 0;
    int orientation = +1;
    std::vector<double> density;
    std::vector<unsigned char> support;

    double at(std::size_t path, int node) const {
        return density[path * static_cast<std::size_t>(grid.n_nodes()) +
                       static_cast<std::size_t>(node)];
    }
    bool on_support(std::size_t path, int node) const {
        return support[path * static_cast<std::size_t>(grid.n_nodes()) +
                       static_cast<std::size_t>(node)] != 0;
    }
};

MultiplierDensity lagrange_density(const Scenario& sc, const ScenarioPaths& paths);

struct KktEntry {
    std::string name;
    double tau = std::numeric_limits<double>::quiet_NaN();  // NaN when not time-indexed
    Estimate estimate;
    double tolerance = 3.0;
    bool pass = false;
};

/// Monte Carlo budget of the verification report.  outer/inner are the
/// nested condition-1 budgets; the pathwise conditions 2 and 3 are cheap and
/// run on the whole ensemble handed in.  taus lists deterministic grid times
/// for condition 1 on top of the always-included crossing times.
struct KktBudget {
    std::size_t outer_paths = 4096;
    std::size_t inner_paths = 512;
    std::vector<double> taus = {0.0};
    double tolerance = 3.0;
};

struct KktReport {
    std::string scenario;
    int orientation = +1;
    Estimate objective;  // J of the evaluated plan; floors the equality tests
    std::vector<KktEntry> condition1;  // one entry per (time slot, firm)
    std::vector<KktEntry> condition2;  // one entry per firm
    KktEntry condition3;
    std::size_t support_nodes = 0;
    std::size_t containment_violations = 0;
    bool condition1_pass = false;
    bool condition2_pass = false;
    bool condition3_pass = false;
    bool verdict = false;
};

/// Checks the three optimality conditions for the plan on the given paths.
///
/// Condition 1 (inequality): at each deterministic tau and at the per-path
/// first crossing of the base capacity over the plan (which is the fuel
/// crossing rho for the optimal plan; when the two differ, both slots are
/// reported), the nested estimate of gradient minus conditional multiplier
/// mass must not exceed tol*SE on the profitable side.  Paths the horizon
/// censors contribute their closed-form frozen tail.
///
/// Condition 2 (equality per firm): pathwise sum of [gradient suffix minus
/// multiplier suffix] times the plan increments; condition 3 (equality):
/// pathwise sum of the fuel slack at the plan's post-jump value against the
/// multiplier mass, plus the exact containment check that every support node
/// has the next-node aggregate exactly on the fuel level.  Equalities pass
/// when |estimate| <= tol*SE and below the absolute floor 1e-2 |J|.
///
/// `perturb` names the law the plan under test follows so condition 1 can
/// rebuild its continuations; pass Perturbation::none for optimal plans.
KktReport kkt_report(const Scenario& sc, const ScenarioPaths& paths, const InvestmentPlan& plan,
                     const MultiplierDensity& density, Perturbation perturb,
                     const KktBudget& budget, std::uint64_t seed);

}  // namespace fuel
