#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fuel/grid.hpp"
#include "fuel/scenario.hpp"

namespace fuel {

/// Config rejections carry the full user-facing message: syntax errors are
/// anchored to line and column, domain errors name the field and the valid
/// interval.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::optional<Scenario> scenario;  // absent for plain calibration configs
    double delta = 1.0;
    TimeGrid grid;
    std::size_t n_paths = 4096;
    std::size_t inner_paths = 512;
    std::uint64_t seed = 0;
    double tolerance = 3.0;
    std::vector<double> taus = {0.0};
    Perturbation perturb = Perturbation::none;
    std::size_t fuel_levels = 101;
    double dp_rel_tol = 0.01;
    std::string out_dir = ".";
};

/// Strict parse of a JSON config: unknown keys are errors, missing fields
/// and out-of-domain values throw config_error naming the field and the
/// valid interval, and syntax errors point at line:column.  `name` prefixes
/// every message (normally the file path).
RunConfig parse_config(const std::string& text, const std::string& name);
RunConfig load_config(const std::string& path);

const Scenario& require_scenario(const RunConfig& cfg);

struct RunResult {
    bool pass = true;  // all verdicts the run emitted; true when none apply
    std::vector<std::string> artifacts;
};

/// Simulate the scenario, build the (optionally perturbed) plan and write
/// policy.csv, profit.json and kkt.json into cfg.out_dir.  The frozen-plan
/// perturbation also swaps in a far-out fuel ceiling, so the failure is
/// carried by the gradient bound rather than masked by the constraint.
RunResult run_simulate(const RunConfig& cfg);

/// The verification alone: kkt.json.
RunResult run_verify_kkt(const RunConfig& cfg);

/// Backward-induction solve: dp.json plus the nonzero rows of the policy
/// table in policy.csv.
RunResult run_solve_dp(const RunConfig& cfg);

/// The Brownian tracking offset at cfg.delta: calibration.json with the
/// estimate next to the closed form 1/sqrt(2 delta).
RunResult run_calibrate_c(const RunConfig& cfg);

/// Two-route certificate: oracle-gap.json.
RunResult run_compare(const RunConfig& cfg);

/// Dispatch by subcommand name; also writes metadata.json (timestamps, wall
/// time, thread count) next to the artifacts so the estimate files stay
/// byte-identical across reruns.
RunResult run_subcommand(const std::string& name, const RunConfig& cfg);

}  // namespace fuel
