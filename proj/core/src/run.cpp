#include "fuel/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fuel/dp.hpp"
#include "fuel/errors.hpp"
#include "fuel/functional.hpp"
#include "fuel/parallel.hpp"

namespace fuel {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& name, const std::string& what) {
    throw config_error(name + ": " + what);
}

// Byte offset -> "line:column" for parse diagnostics.
std::string anchor(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    char buf[48];
    std::snprintf(buf, sizeof buf, "%zu:%zu", line, col);
    return buf;
}

void check_keys(const json& obj, const std::string& name, const std::string& where,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed) ok = ok || it.key() == k;
        if (!ok) {
            std::string list;
            for (const char* k : allowed) {
                if (!list.empty()) list += ", ";
                list += k;
            }
            fail(name, "unknown key '" + it.key() + "' in " + where + " (allowed: " + list + ")");
        }
    }
}

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double number_at(const json& v, const std::string& name, const std::string& where) {
    if (!v.is_number()) fail(name, where + " must be a number");
    return v.get<double>();
}

double req_number(const json& obj, const std::string& name, const std::string& where,
                  const char* key) {
    const json* v = find(obj, key);
    if (!v) fail(name, where + "." + key + " is required");
    return number_at(*v, name, where + "." + std::string(key));
}

double opt_number(const json& obj, const std::string& name, const std::string& where,
                  const char* key, double fallback) {
    const json* v = find(obj, key);
    return v ? number_at(*v, name, where + "." + std::string(key)) : fallback;
}

std::size_t opt_count(const json& obj, const std::string& name, const std::string& where,
                      const char* key, std::size_t fallback, std::size_t least) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    std::string full = where + "." + key;
    if (!v->is_number_integer() || v->get<long long>() < static_cast<long long>(least)) {
        char msg[96];
        std::snprintf(msg, sizeof msg, "%s must be an integer >= %zu", full.c_str(), least);
        fail(name, msg);
    }
    return v->get<std::size_t>();
}

void domain(bool ok, const std::string& name, const std::string& field, double got,
            const char* interval) {
    if (ok) return;
    char msg[160];
    std::snprintf(msg, sizeof msg, "%s must lie in %s; got %g", field.c_str(), interval, got);
    fail(name, msg);
}

ShockModel parse_shock(const json& obj, const std::string& name, ScenarioTag tag) {
    if (!obj.is_object()) fail(name, "shock must be an object");
    if (tag == ScenarioTag::quadratic) {
        check_keys(obj, name, "shock", {"w0"});
        return ArithmeticBrownian{opt_number(obj, name, "shock", "w0", 0.0)};
    }
    check_keys(obj, name, "shock", {"x0", "mu", "sigma"});
    GeometricBrownian g;
    g.x0 = opt_number(obj, name, "shock", "x0", 1.0);
    g.mu = opt_number(obj, name, "shock", "mu", 0.0);
    g.sigma = req_number(obj, name, "shock", "sigma");
    domain(g.x0 > 0.0, name, "shock.x0", g.x0, "(0, inf)");
    domain(g.sigma >= 0.0, name, "shock.sigma", g.sigma, "[0, inf)");
    return g;
}

FuelModel parse_fuel(const json& obj, const std::string& name) {
    if (!obj.is_object()) fail(name, "fuel must be an object");
    check_keys(obj, name, "fuel", {"theta0", "rate", "mu", "sigma"});
    double theta0 = req_number(obj, name, "fuel", "theta0");
    domain(theta0 > 0.0, name, "fuel.theta0", theta0, "(0, inf)");
    bool affine = find(obj, "rate") != nullptr;
    bool noisy = find(obj, "mu") != nullptr || find(obj, "sigma") != nullptr;
    if (affine && noisy) fail(name, "fuel mixes the affine 'rate' with running-max 'mu'/'sigma'");
    if (affine) {
        double rate = req_number(obj, name, "fuel", "rate");
        domain(rate >= 0.0, name, "fuel.rate", rate, "[0, inf)");
        return AffineFuel{theta0, rate};
    }
    if (noisy) {
        RunningMaxFuel rm;
        rm.theta0 = theta0;
        rm.mu = opt_number(obj, name, "fuel", "mu", 0.0);
        rm.sigma = req_number(obj, name, "fuel", "sigma");
        domain(rm.sigma >= 0.0, name, "fuel.sigma", rm.sigma, "[0, inf)");
        return rm;
    }
    return ConstantFuel{theta0};
}

std::vector<Firm> parse_firms(const json& arr, const std::string& name) {
    if (!arr.is_array() || arr.empty()) fail(name, "firms must be a non-empty array");
    std::vector<Firm> firms;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        char where[32];
        std::snprintf(where, sizeof where, "firms[%zu]", i);
        const json& f = arr[i];
        if (!f.is_object()) fail(name, std::string(where) + " must be an object");
        check_keys(f, name, where, {"alpha", "y"});
        Firm firm;
        firm.alpha = opt_number(f, name, where, "alpha", 0.5);
        firm.y = req_number(f, name, where, "y");
        domain(firm.alpha > 0.0 && firm.alpha < 1.0, name, std::string(where) + ".alpha",
               firm.alpha, "the open interval (0, 1)");
        domain(firm.y > 0.0, name, std::string(where) + ".y", firm.y, "(0, inf)");
        firms.push_back(firm);
    }
    return firms;
}

json est_json(const Estimate& e) {
    return json{{"mean", e.mean},
                {"std_error", e.std_error},
                {"n_paths", e.n_paths},
                {"tail_bound", e.tail_bound}};
}

json entry_json(const KktEntry& e) {
    json j{{"name", e.name},
           {"estimate", est_json(e.estimate)},
           {"tolerance", e.tolerance},
           {"pass", e.pass}};
    if (std::isfinite(e.tau)) j["tau"] = e.tau;
    return j;
}

json kkt_json(const KktReport& rep, Perturbation perturb) {
    json grad = json::array(), flat = json::array();
    for (const KktEntry& e : rep.condition1) grad.push_back(entry_json(e));
    for (const KktEntry& e : rep.condition2) flat.push_back(entry_json(e));
    json comp = entry_json(rep.condition3);
    comp["support_nodes"] = rep.support_nodes;
    comp["containment_violations"] = rep.containment_violations;
    return json{{"scenario", rep.scenario},
                {"perturb", perturbation_name(perturb)},
                {"orientation", rep.orientation},
                {"objective", est_json(rep.objective)},
                {"gradient_bound", grad},
                {"flat_off", flat},
                {"complementarity", comp},
                {"pass",
                 {{"gradient_bound", rep.condition1_pass},
                  {"flat_off", rep.condition2_pass},
                  {"complementarity", rep.condition3_pass}}},
                {"verdict", rep.verdict}};
}

std::string artifact_path(const RunConfig& cfg, const char* file) {
    return (std::filesystem::path(cfg.out_dir) / file).string();
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
}

void emit_json(RunResult& res, const RunConfig& cfg, const char* file, const json& j) {
    std::string path = artifact_path(cfg, file);
    write_text(path, j.dump(2) + "\n");
    res.artifacts.push_back(path);
}

// Mean and nearest-rank quantile trajectory of the plan, one block per firm.
void write_plan_csv(const std::string& path, const ScenarioPaths& paths,
                    const InvestmentPlan& plan) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "firm,t,plan_mean,plan_p10,plan_p50,plan_p90,theta_mean\n";
    const TimeGrid& grid = plan.grid();
    std::size_t paths_n = plan.n_paths();
    std::vector<double> col(paths_n);
    char line[224];
    for (std::size_t i = 0; i < plan.n_firms(); ++i) {
        for (int k = 0; k <= grid.n_steps; ++k) {
            double mean = 0.0, tmean = 0.0;
            for (std::size_t p = 0; p < paths_n; ++p) {
                col[p] = plan.firms[i].at(p, k);
                mean += col[p];
                tmean += paths.theta.at(p, k);
            }
            mean /= static_cast<double>(paths_n);
            tmean /= static_cast<double>(paths_n);
            std::sort(col.begin(), col.end());
            auto rank = [&](double q) {
                return col[static_cast<std::size_t>(q * static_cast<double>(paths_n - 1))];
            };
            std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i + 1,
                          grid.node(k), mean, rank(0.10), rank(0.50), rank(0.90), tmean);
            out << line;
        }
    }
}

// The frozen-plan perturbation is defined under a far-out ceiling: with the
// constraint slack the multiplier vanishes and the plain gradient sign
// carries the verdict.
Scenario effective_scenario(const RunConfig& cfg) {
    const Scenario& sc = require_scenario(cfg);
    return cfg.perturb == Perturbation::frozen_plan ? with_generous_fuel(sc) : sc;
}

KktReport verification(const RunConfig& cfg, const Scenario& sc, const ScenarioPaths& paths,
                       const InvestmentPlan& plan) {
    MultiplierDensity density = lagrange_density(sc, paths);
    KktBudget budget;
    budget.outer_paths = cfg.n_paths;
    budget.inner_paths = cfg.inner_paths;
    budget.taus = cfg.taus;
    budget.tolerance = cfg.tolerance;
    return kkt_report(sc, paths, plan, density, cfg.perturb, budget, cfg.seed);
}

json profit_json(const RunConfig& cfg, const Scenario& sc, const ScenarioPaths& paths,
                 const InvestmentPlan& plan, const Estimate& objective) {
    json j{{"scenario", scenario_name(sc.tag)},
           {"perturb", perturbation_name(cfg.perturb)},
           {"orientation", scenario_orientation(sc)},
           {"objective", est_json(objective)}};
    if (sc.tag != ScenarioTag::quadratic) {
        std::vector<ProfitModel> models;
        for (const Firm& f : sc.firms) models.push_back(CobbDouglas{f.alpha});
        ProfitBreakdown pb = net_profit(plan, paths.shock, sc.shock, models, sc.delta);
        json per = json::array();
        for (const Estimate& e : pb.per_firm) per.push_back(est_json(e));
        j["per_firm"] = per;
    }
    return j;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& name) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(name + ":" + anchor(text, e.byte > 0 ? e.byte - 1 : 0),
             "config is not valid JSON (" + std::string(e.what()) + ")");
    }
    if (!root.is_object()) fail(name, "config must be a JSON object");
    check_keys(root, name, "the config",
               {"scenario", "shock", "fuel", "delta", "firms", "grid", "mc", "taus", "perturb",
                "dp", "outputs"});

    RunConfig cfg;
    cfg.delta = req_number(root, name, "config", "delta");
    domain(cfg.delta > 0.0, name, "delta", cfg.delta, "(0, inf)");

    const json* grid = find(root, "grid");
    if (!grid || !grid->is_object()) fail(name, "grid must be an object with t_max and n_steps");
    check_keys(*grid, name, "grid", {"t_max", "n_steps"});
    double t_max = req_number(*grid, name, "grid", "t_max");
    domain(t_max > 0.0, name, "grid.t_max", t_max, "(0, inf)");
    std::size_t n_steps = opt_count(*grid, name, "grid", "n_steps", 0, 1);
    if (n_steps == 0) fail(name, "grid.n_steps is required");
    cfg.grid = make_grid(t_max, static_cast<int>(n_steps));

    if (const json* mc = find(root, "mc")) {
        if (!mc->is_object()) fail(name, "mc must be an object");
        check_keys(*mc, name, "mc", {"n_paths", "inner_paths", "seed", "tolerance"});
        cfg.n_paths = opt_count(*mc, name, "mc", "n_paths", cfg.n_paths, 2);
        cfg.inner_paths = opt_count(*mc, name, "mc", "inner_paths", cfg.inner_paths, 2);
        cfg.seed = opt_count(*mc, name, "mc", "seed", cfg.seed, 0);
        cfg.tolerance = opt_number(*mc, name, "mc", "tolerance", cfg.tolerance);
        domain(cfg.tolerance > 0.0, name, "mc.tolerance", cfg.tolerance, "(0, inf)");
    }
    if (const json* taus = find(root, "taus")) {
        if (!taus->is_array()) fail(name, "taus must be an array of grid times");
        cfg.taus.clear();
        for (std::size_t i = 0; i < taus->size(); ++i) {
            char where[24];
            std::snprintf(where, sizeof where, "taus[%zu]", i);
            double t = number_at((*taus)[i], name, where);
            domain(t >= 0.0 && t <= cfg.grid.t_max, name, where, t, "[0, t_max]");
            cfg.taus.push_back(t);
        }
    }
    if (const json* p = find(root, "perturb")) {
        if (!p->is_string()) fail(name, "perturb must be a string");
        try {
            cfg.perturb = perturbation_from_name(p->get<std::string>());
        } catch (const std::exception&) {
            fail(name, "perturb must be one of none, early-overinvest, fuel-overshoot, "
                       "frozen-plan; got '" +
                           p->get<std::string>() + "'");
        }
    }
    if (const json* dp = find(root, "dp")) {
        if (!dp->is_object()) fail(name, "dp must be an object");
        check_keys(*dp, name, "dp", {"fuel_levels", "rel_tol"});
        cfg.fuel_levels = opt_count(*dp, name, "dp", "fuel_levels", cfg.fuel_levels, 2);
        cfg.dp_rel_tol = opt_number(*dp, name, "dp", "rel_tol", cfg.dp_rel_tol);
        domain(cfg.dp_rel_tol > 0.0, name, "dp.rel_tol", cfg.dp_rel_tol, "(0, inf)");
    }
    if (const json* o = find(root, "outputs")) {
        if (!o->is_object()) fail(name, "outputs must be an object");
        check_keys(*o, name, "outputs", {"directory"});
        if (const json* d = find(*o, "directory")) {
            if (!d->is_string()) fail(name, "outputs.directory must be a string");
            cfg.out_dir = d->get<std::string>();
        }
    }

    const json* tag = find(root, "scenario");
    const json* shock = find(root, "shock");
    const json* fuel = find(root, "fuel");
    const json* firms = find(root, "firms");
    if (tag || shock || fuel || firms) {
        if (!tag || !shock || !fuel || !firms)
            fail(name, "scenario, shock, fuel and firms must appear together");
        if (!tag->is_string())
            fail(name, "scenario must be one of bank-general, quadratic, cobb-single, cobb-nfirm");
        ScenarioTag st;
        try {
            st = scenario_from_name(tag->get<std::string>());
        } catch (const std::exception&) {
            fail(name, "scenario must be one of bank-general, quadratic, cobb-single, "
                       "cobb-nfirm; got '" +
                           tag->get<std::string>() + "'");
        }
        ShockModel sm = parse_shock(*shock, name, st);
        FuelModel fm = parse_fuel(*fuel, name);
        std::vector<Firm> fs = parse_firms(*firms, name);
        try {
            cfg.scenario = make_scenario(st, sm, fm, cfg.delta, fs);
        } catch (const std::exception& e) {
            fail(name, e.what());
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error(path + ": cannot read config");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

const Scenario& require_scenario(const RunConfig& cfg) {
    if (!cfg.scenario)
        throw config_error("this subcommand needs scenario, shock, fuel and firms in the config");
    return *cfg.scenario;
}

RunResult run_simulate(const RunConfig& cfg) {
    Scenario sc = effective_scenario(cfg);
    ScenarioPaths paths = simulate_scenario(sc, cfg.grid, cfg.n_paths, cfg.seed);
    InvestmentPlan plan = perturbed_plan(sc, paths, cfg.perturb);
    KktReport rep = verification(cfg, sc, paths, plan);

    RunResult res;
    std::string csv = artifact_path(cfg, "policy.csv");
    write_plan_csv(csv, paths, plan);
    res.artifacts.push_back(csv);
    emit_json(res, cfg, "profit.json", profit_json(cfg, sc, paths, plan, rep.objective));
    emit_json(res, cfg, "kkt.json", kkt_json(rep, cfg.perturb));
    res.pass = rep.verdict;
    return res;
}

RunResult run_verify_kkt(const RunConfig& cfg) {
    Scenario sc = effective_scenario(cfg);
    ScenarioPaths paths = simulate_scenario(sc, cfg.grid, cfg.n_paths, cfg.seed);
    InvestmentPlan plan = perturbed_plan(sc, paths, cfg.perturb);
    KktReport rep = verification(cfg, sc, paths, plan);

    RunResult res;
    emit_json(res, cfg, "kkt.json", kkt_json(rep, cfg.perturb));
    res.pass = rep.verdict;
    return res;
}

RunResult run_solve_dp(const RunConfig& cfg) {
    const Scenario& sc = require_scenario(cfg);
    std::vector<double> y;
    std::vector<ProfitModel> profit;
    for (std::size_t i = 0; i < sc.firms.size(); ++i) {
        y.push_back(sc.firms[i].y);
        profit.push_back(firm_profit(sc, i));
    }
    FuelGrid fg = make_fuel_grid(y, fuel_at(sc.fuel, cfg.grid.t_max), cfg.fuel_levels);
    Lattice lat = build_lattice(sc.shock, cfg.grid);
    DpResult dp = dp_solve(lat, sc.fuel, profit, y, fg, sc.delta);

    RunResult res;
    std::string csv = artifact_path(cfg, "policy.csv");
    write_policy_csv(dp, lat, csv);
    res.artifacts.push_back(csv);
    emit_json(res, cfg, "dp.json",
              json{{"scenario", scenario_name(sc.tag)},
                   {"value", dp.value},
                   {"fuel_levels", cfg.fuel_levels},
                   {"grid", {{"t_max", cfg.grid.t_max}, {"n_steps", cfg.grid.n_steps}}}});
    return res;
}

RunResult run_calibrate_c(const RunConfig& cfg) {
    McParams mc;
    mc.n_paths = cfg.n_paths;
    mc.grid = cfg.grid;
    mc.seed = cfg.seed;
    Estimate c = quadratic_offset_c(cfg.delta, mc);

    RunResult res;
    emit_json(res, cfg, "calibration.json",
              json{{"delta", cfg.delta},
                   {"offset", est_json(c)},
                   {"closed_form", 1.0 / std::sqrt(2.0 * cfg.delta)}});
    return res;
}

RunResult run_compare(const RunConfig& cfg) {
    Scenario sc = effective_scenario(cfg);
    OracleGapParams p;
    p.grid = cfg.grid;
    p.fuel_levels = cfg.fuel_levels;
    p.mc_paths = cfg.n_paths;
    p.seed = cfg.seed;
    p.rel_tol = cfg.dp_rel_tol;
    OracleGap og = oracle_gap(sc, p, cfg.perturb);

    RunResult res;
    emit_json(res, cfg, "oracle-gap.json",
              json{{"scenario", scenario_name(sc.tag)},
                   {"perturb", perturbation_name(cfg.perturb)},
                   {"dp_value", og.dp_value},
                   {"policy_value", est_json(og.policy_value)},
                   {"gap", og.gap},
                   {"rel_tol", p.rel_tol},
                   {"pass", og.pass}});
    res.pass = og.pass;
    return res;
}

RunResult run_subcommand(const std::string& name, const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    auto started = std::chrono::system_clock::now();
    auto tick = std::chrono::steady_clock::now();

    RunResult res;
    if (name == "simulate")
        res = run_simulate(cfg);
    else if (name == "verify-kkt")
        res = run_verify_kkt(cfg);
    else if (name == "solve-dp")
        res = run_solve_dp(cfg);
    else if (name == "calibrate-c")
        res = run_calibrate_c(cfg);
    else if (name == "compare")
        res = run_compare(cfg);
    else
        throw config_error("unknown subcommand '" + name +
                           "' (expected simulate, verify-kkt, solve-dp, calibrate-c, compare)");

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - tick).count();
    std::time_t t0 = std::chrono::system_clock::to_time_t(started);
    std::tm tm{};
    gmtime_r(&t0, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);

    json names = json::array();
    for (const std::string& a : res.artifacts)
        names.push_back(std::filesystem::path(a).filename().string());
    json meta{{"subcommand", name},          {"seed", cfg.seed},
              {"threads", resolved_threads()}, {"started", stamp},
              {"wall_seconds", wall},        {"artifacts", names},
              {"pass", res.pass}};
    write_text(artifact_path(cfg, "metadata.json"), meta.dump(2) + "\n");
    return res;
}

}  // namespace fuel
