#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fuel/estimate.hpp"
#include "fuel/grid.hpp"
#include "fuel/policy.hpp"
#include "fuel/profit.hpp"
#include "fuel/scenario.hpp"
#include "fuel/shocks.hpp"

namespace fuel {

/// Recombining binomial discretization of a shock model.  Step k carries
/// k + 1 node values, except that a zero-volatility model collapses to one
/// node per step (the deterministic path itself, exact).  The up-move
/// probability matches the one-step mean of the model exactly.
struct Lattice {
    TimeGrid grid;
    ShockModel model;
    bool degenerate = false;  // one node per step, p ignored
    double p = 0.5;           // probability of the up child
    std::vector<std::vector<double>> nodes;

    std::size_t width(std::size_t step) const { return nodes[step].size(); }
    double value(std::size_t step, std::size_t node) const { return nodes[step][node]; }
};

/// Geometric shocks step by e^{+-sigma sqrt(dt)} with
/// p = (e^{mu dt} - d) / (u - d); throws unstable_discretization when that
/// leaves (0,1), i.e. when |mu| sqrt(dt) >= sigma.  The standard Brownian
/// shock steps by +-sqrt(dt) with p = 1/2.
Lattice build_lattice(const ShockModel& model, const TimeGrid& grid);

/// A flat single-node lattice pinned at `value`: the zero-volatility limit
/// of the tracking shock.  Frozen-tail valuations treat it as constant
/// forever (no diffusion variance in the continuation).
Lattice degenerate_lattice(const TimeGrid& grid, double value);

/// Expectation of the lattice value at a step, by forward propagation of the
/// node probabilities.  For geometric models this equals x0 e^{mu t_k} up to
/// rounding, since each step matches the conditional mean exactly.
double lattice_mean(const Lattice& lat, std::size_t step);

/// Quantized cumulative-investment levels, one increasing vector per firm.
/// The first level of firm i is its initial capacity, the last its largest
/// reachable level when everyone else stays put.
struct FuelGrid {
    std::vector<std::vector<double>> levels;
};

/// Uniform per-firm grids with m levels from y_i to
/// y_i + (theta_max - sum_j y_j); endpoints are hit exactly.
FuelGrid make_fuel_grid(const std::vector<double>& y, double theta_max, std::size_t m);

/// Chosen increments, in fuel-grid steps, for every (step, lattice node,
/// fuel state, firm).  Fuel states are flattened firm-major, so for two
/// firms fs = f1 * fuel_dim[1] + f2.
struct PolicyTable {
    std::size_t n_firms = 1;
    std::vector<std::size_t> fuel_dim;
    std::vector<std::size_t> base;      // per-step state offsets; base[n_steps] = total
    std::vector<std::uint16_t> moves;   // total states x n_firms

    std::size_t fuel_states() const;
    std::uint16_t move(std::size_t step, std::size_t node, std::size_t fs,
                       std::size_t firm) const;
};

struct DpResult {
    double value = 0.0;  // natural units: expected net profit, or expected
                         // tracking cost for the quadratic objective
    PolicyTable policy;
};

inline constexpr std::size_t dp_default_memory_budget = std::size_t{1} << 30;

/// Exhaustive backward induction over (step, lattice node, quantized fuel
/// state) for one or two firms.  Controls are nonnegative per-firm steps on
/// the fuel grid whose landing levels sum to at most the fuel ceiling at the
/// next node; investment is charged at the decision node's discount factor
/// and the terminal value is the frozen-plan analytic tail, so the objective
/// agrees with the path-functional evaluation step for step.  Ties in the
/// argmax prefer the smallest investment.  Throws unsupported_model for
/// stochastic fuel and budget_exceeded (with the estimate in the message)
/// when the tables would not fit `memory_budget` bytes.
DpResult dp_solve(const Lattice& lat, const FuelModel& fuel,
                  const std::vector<ProfitModel>& profit, const std::vector<double>& y,
                  const FuelGrid& fg, double delta,
                  std::size_t memory_budget = dp_default_memory_budget);

DpResult dp_solve(const Lattice& lat, const FuelModel& fuel, const ProfitModel& profit,
                  const std::vector<double>& y, const FuelGrid& fg, double delta,
                  std::size_t memory_budget = dp_default_memory_budget);

/// Exact expectation of an arbitrary quantized policy under the lattice
/// measure, by forward induction over the joint (node, fuel state) chain.
/// The optimal table reproduces dp_solve's value up to rounding, and no
/// admissible table beats it.  Throws invalid_argument if the table walks
/// off the fuel grid or through the fuel ceiling.
double lattice_policy_value(const Lattice& lat, const FuelModel& fuel,
                            const std::vector<ProfitModel>& profit, const std::vector<double>& y,
                            const FuelGrid& fg, double delta, const PolicyTable& policy);

/// Rows "step,node,fuel..." -> per-firm increments, one line per state with
/// a nonzero move; all-zero states are omitted to keep the file proportional
/// to the action events.
void write_policy_csv(const DpResult& dp, const Lattice& lat, std::ostream& out);
void write_policy_csv(const DpResult& dp, const Lattice& lat, const std::string& file);

/// Floor projection of every plan value onto the fuel grid: the largest
/// level not exceeding the value.  Keeps monotonicity and admissibility
/// (levels only shrink) so both sides of the oracle comparison carry the
/// same quantization bias direction.
InvestmentPlan project_plan(const InvestmentPlan& plan, const FuelGrid& fg);

struct OracleGapParams {
    TimeGrid grid;
    std::size_t fuel_levels = 101;
    std::size_t mc_paths = 4096;
    std::uint64_t seed = 0;
    double rel_tol = 0.01;
    std::size_t memory_budget = dp_default_memory_budget;
};

struct OracleGap {
    double dp_value = 0.0;
    Estimate policy_value;
    double gap = 0.0;  // improvement of the DP over the policy, in the
                       // objective's better-is-larger direction
    bool pass = false;
};

/// The two-route certificate: solve the scenario by backward induction and
/// evaluate the closed-form plan (projected onto the same fuel grid) by
/// Monte Carlo on a common grid.  The DP dominates by construction, so the
/// gap must be nonnegative up to noise yet small if the closed form is
/// optimal: pass iff gap <= max(rel_tol * |dp_value|, 3 SE) and
/// gap >= -3 SE.  `perturb` swaps in a deliberately suboptimal plan, which
/// should push the gap well past the tolerance.
OracleGap oracle_gap(const Scenario& sc, const OracleGapParams& params,
                     Perturbation perturb = Perturbation::none);

}  // namespace fuel
