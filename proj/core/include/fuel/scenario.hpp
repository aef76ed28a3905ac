#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fuel/base_capacity.hpp"
#include "fuel/ensemble.hpp"
#include "fuel/policy.hpp"
#include "fuel/profit.hpp"
#include "fuel/shocks.hpp"

namespace fuel {

// The four desk setups.  bank_general is a Cobb-Douglas firm under affine
// (replenishable) fuel; quadratic is the tracking-cost minimization;
// cobb_single and cobb_nfirm are the constant-fuel profit cases for one and
// several firms.
enum class ScenarioTag { bank_general, quadratic, cobb_single, cobb_nfirm };

const char* scenario_name(ScenarioTag tag);
ScenarioTag scenario_from_name(const std::string& name);

struct Firm {
    double alpha = 0.5;  // Cobb-Douglas exponent; ignored by the quadratic case
    double y = 0.1;      // initial capacity, > 0
};

/// A validated scenario with its derived closed-form quantities: the base
/// capacity scale k_i and tail denominator D_i per firm, the allocation
/// weights, and the quadratic offset c.  Construct through make_scenario.
struct Scenario {
    ScenarioTag tag = ScenarioTag::cobb_single;
    ShockModel shock;
    FuelModel fuel;
    double delta = 1.0;
    std::vector<Firm> firms;

    std::vector<double> k;  // per firm; empty for the quadratic case
    std::vector<double> D;  // per-firm discounted power-moment denominator
    AllocationWeights beta;
    double c = 0.0;  // quadratic offset 1/sqrt(2 delta); 0 otherwise
};

/// Validates models and domains, then derives k, D, beta and c.  Throws
/// invalid_argument / integrability_error / infeasible_initialization with
/// the offending field in the message.
Scenario make_scenario(ScenarioTag tag, const ShockModel& shock, const FuelModel& fuel,
                       double delta, const std::vector<Firm>& firms);

ProfitModel firm_profit(const Scenario& sc, std::size_t firm);
BaseCapacitySpec firm_base(const Scenario& sc, std::size_t firm);

/// +1 for the profit-maximization cases, -1 for the quadratic minimization.
int scenario_orientation(const Scenario& sc);

/// Everything simulated once per run: shock and fuel at the nodes plus the
/// per-firm base capacities and their sum.  Base capacities are deterministic
/// transforms of the shock, so shock and fuel streams are the only draws.
// The *_sup members hold exact cell suprema drawn from the Brownian bridge:
// column k < n_steps is the supremum of the shock (and its base-capacity
// images) over [t_k, t_{k+1}], column n_steps repeats the final node.  Plans
// built from node values alone systematically under-reflect, so the optimal
// policies track these instead.  Invariant: sup >= both cell endpoints,
// componentwise and bitwise.
struct ScenarioPaths {
    PathEnsemble shock;
    PathEnsemble theta;
    std::vector<PathEnsemble> l;
    PathEnsemble l_aggregate;
    PathEnsemble shock_sup;
    std::vector<PathEnsemble> l_sup;
    PathEnsemble l_aggregate_sup;
};

ScenarioPaths simulate_scenario(const Scenario& sc, const TimeGrid& grid, std::size_t n_paths,
                                std::uint64_t seed);

/// The closed-form optimal plan on the simulated paths: the single-firm
/// reflection policy, or the share-split policy for several firms.
InvestmentPlan optimal_plan(const Scenario& sc, const ScenarioPaths& paths);

// Built-in ways to break optimality while staying admissible, for exercising
// the verification machinery.  frozen_plan is meant to be paired with
// with_generous_fuel so the multiplier vanishes and the plain supergradient
// sign carries the verdict.
enum class Perturbation { none, early_overinvest, fuel_overshoot, frozen_plan };

const char* perturbation_name(Perturbation p);
Perturbation perturbation_from_name(const std::string& name);

/// Same scenario with the fuel ceiling scaled far out of reach.
Scenario with_generous_fuel(const Scenario& sc, double factor = 100.0);

/// Size of the forced extra investment under early_overinvest: a tenth of the
/// initial fuel.  Exposed so verification can rebuild the perturbed plan's
/// continuation law with the same constant.
double perturbation_bump(const Scenario& sc);

/// The optimal plan deformed by the chosen perturbation; `none` returns the
/// optimal plan itself.  All outputs are admissible and adapted.
InvestmentPlan perturbed_plan(const Scenario& sc, const ScenarioPaths& paths, Perturbation p);

/// One of five families of admissible adapted challenger plans (frozen,
/// scaled base, delayed entry, single step, lagged cap), drawn from the
/// challenger stream of the master seed; `index` selects family and draws.
/// Evaluating these against the optimal plan on the same paths gives the
/// paired dominance check.
InvestmentPlan challenger_plan(const Scenario& sc, const ScenarioPaths& paths,
                               std::uint64_t master_seed, std::size_t index);

}  // namespace fuel
