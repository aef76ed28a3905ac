#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fuel/functional.hpp"
#include "fuel/errors.hpp"

using namespace fuel;

namespace {

Scenario cobb_single_small() {
    return make_scenario(ScenarioTag::cobb_single, GeometricBrownian{1.0, 0.0, 0.3},
                         ConstantFuel{1.6003521586157361}, 1.0,
                         {Firm{0.5, 0.20004401982696701}});
}

InvestmentPlan constant_plan(const TimeGrid& g, std::size_t n_paths, double y) {
    InvestmentPlan plan;
    plan.y = {y};
    plan.firms.push_back(PathEnsemble::constant(g, n_paths, y));
    return plan;
}

}  // namespace

TEST_CASE("net profit of a frozen unit plan matches its discrete closed form") {
    // X geometric with x0 = 1, mu = 0, sigma = 1, so E[X_s^(1/2)] = e^(-s/8);
    // a plan pinned at 1 earns R(X, 1) = 2 sqrt(X) and never invests.  The
    // estimator's target is the left-endpoint sum of that expectation (plus
    // nothing: no jumps), which converges to 2/D = 16/9 as dt -> 0.
    TimeGrid g = make_grid(16.0, 320);
    GeometricBrownian m{1.0, 0.0, 1.0};
    PathEnsemble shock = simulate_shock(m, g, 4096, 37);
    InvestmentPlan plan = constant_plan(g, 4096, 1.0);
    ProfitBreakdown pb = net_profit(plan, shock, m, ProfitModel{CobbDouglas{0.5}}, 1.0);

    double target = 0.0;
    for (int k = 0; k < g.n_steps; ++k)
        target += std::exp(-g.node(k)) * 2.0 * std::exp(-g.node(k) / 8.0) * g.dt();
    CHECK(std::fabs(target - 16.0 / 9.0) < 0.06);  // the dt bias, for scale
    CHECK(pb.aggregate.n_paths == 4096);
    CHECK(std::fabs(pb.aggregate.mean - target) <= 3.0 * pb.aggregate.std_error);
    CHECK(pb.aggregate.tail_bound > 0.0);
    REQUIRE(pb.per_firm.size() == 1);
    CHECK(pb.per_firm[0].mean == pb.aggregate.mean);
}

TEST_CASE("net profit accounts a hand-sized plan exactly") {
    // deterministic shock, two steps, one jump: every term is checkable by hand
    TimeGrid g = make_grid(1.0, 2);
    GeometricBrownian m{1.0, 0.0, 0.0};  // X = 1 for all times
    PathEnsemble shock = simulate_shock(m, g, 2, 0);
    InvestmentPlan plan = constant_plan(g, 2, 0.5);
    plan.firms[0].row(0)[1] = 0.8;  // jump of 0.3 lands at node 1 on path 0
    plan.firms[0].row(0)[2] = 0.8;

    std::vector<double> per_path;
    ProfitBreakdown pb =
        net_profit(plan, shock, m, ProfitModel{CobbDouglas{0.5}}, 1.0, &per_path);
    auto r = [](double y) { return 2.0 * std::sqrt(y); };
    // the 0.3 increment is charged at the left node of its cell, so at t = 0
    double dt = 0.5;
    double p0 = r(0.5) * dt + std::exp(-0.5) * r(0.8) * dt - 0.3;
    double p1 = r(0.5) * dt + std::exp(-0.5) * r(0.5) * dt;
    REQUIRE(per_path.size() == 2);
    CHECK(per_path[0] == doctest::Approx(p0).epsilon(1e-14));
    CHECK(per_path[1] == doctest::Approx(p1).epsilon(1e-14));
    CHECK(pb.aggregate.mean == doctest::Approx(0.5 * (p0 + p1)).epsilon(1e-14));
}

TEST_CASE("net profit refuses cost-oriented models") {
    TimeGrid g = make_grid(1.0, 2);
    GeometricBrownian m{1.0, 0.0, 0.0};
    PathEnsemble x = simulate_shock(m, g, 2, 0);
    InvestmentPlan plan = constant_plan(g, 2, 0.5);
    CHECK_THROWS_AS(net_profit(plan, x, m, ProfitModel{QuadraticTracking{}}, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        net_profit(plan, x, ArithmeticBrownian{0.0}, ProfitModel{CobbDouglas{0.5}}, 1.0),
        std::invalid_argument);
}

TEST_CASE("multi-firm profits aggregate per path") {
    TimeGrid g = make_grid(2.0, 20);
    GeometricBrownian m{1.0, 0.0, 0.4};
    PathEnsemble shock = simulate_shock(m, g, 512, 5);
    InvestmentPlan plan;
    plan.y = {0.3, 0.7};
    plan.firms.push_back(PathEnsemble::constant(g, 512, 0.3));
    plan.firms.push_back(PathEnsemble::constant(g, 512, 0.7));
    ProfitBreakdown pb = net_profit(plan, shock, m, ProfitModel{CobbDouglas{0.5}}, 1.0);
    REQUIRE(pb.per_firm.size() == 2);
    CHECK(pb.aggregate.mean ==
          doctest::Approx(pb.per_firm[0].mean + pb.per_firm[1].mean).epsilon(1e-12));
}

TEST_CASE("tracking cost of the do-nothing plan matches its discrete target") {
    // E[W_s^2] = s, so the left-endpoint target is sum_k delta e^{-delta t_k}
    // (t_k / 2) dt; the continuum limit is 1/2.
    TimeGrid g = make_grid(16.0, 320);
    PathEnsemble w = simulate_shock(ArithmeticBrownian{0.0}, g, 4096, 41);
    InvestmentPlan plan = constant_plan(g, 4096, 1e-9);
    // capacity ~ 0: the quadratic case tracks W from a level of zero
    plan.y = {1e-9};
    std::vector<double> per_path;
    Estimate cost = tracking_cost(plan, w, 1.0, &per_path);

    double target = 0.0;
    for (int k = 0; k < g.n_steps; ++k)
        target += std::exp(-g.node(k)) * 0.5 * g.node(k) * g.dt();
    CHECK(std::fabs(target - 0.5) < 0.02);
    CHECK(std::fabs(cost.mean - target) <= 3.0 * cost.std_error);
    CHECK(per_path.size() == 4096);

    // the reported tail bound is the exact frozen-plan remainder
    double tail = 0.0;
    for (std::size_t p = 0; p < 4096; ++p) {
        double d = w.at(p, 320) - 1e-9;
        tail += std::exp(-16.0) * (0.5 * d * d + 0.5);
    }
    tail /= 4096.0;
    CHECK(cost.tail_bound == doctest::Approx(tail).epsilon(1e-12));
}

TEST_CASE("the scenario objective dispatches on orientation") {
    Scenario sc = cobb_single_small();
    TimeGrid g = make_grid(8.0, 160);
    ScenarioPaths paths = simulate_scenario(sc, g, 256, 9);
    InvestmentPlan plan = optimal_plan(sc, paths);
    std::vector<double> per_path;
    Estimate obj = plan_objective(sc, paths, plan, &per_path);
    CHECK(per_path.size() == 256);
    CHECK(obj.mean > 0.0);
    ProfitBreakdown pb = net_profit(plan, paths.shock, sc.shock,
                                    ProfitModel{CobbDouglas{sc.firms[0].alpha}}, sc.delta);
    CHECK(obj.mean == doctest::Approx(pb.aggregate.mean).epsilon(1e-13));

    Scenario q = make_scenario(ScenarioTag::quadratic, ArithmeticBrownian{0.0}, ConstantFuel{1.0},
                               1.0, {Firm{0.5, 0.1}});
    ScenarioPaths qpaths = simulate_scenario(q, g, 256, 9);
    InvestmentPlan qplan = optimal_plan(q, qpaths);
    Estimate qobj = plan_objective(q, qpaths, qplan);
    Estimate qcost = tracking_cost(qplan, qpaths.shock, q.delta);
    CHECK(qobj.mean == doctest::Approx(qcost.mean).epsilon(1e-13));
}

TEST_CASE("supergradient of a frozen plan hits the analytic expectation") {
    // frozen law: the continuation never moves, so the estimate targets
    //   sum_k m_k E[X_k^a] y^(-a) + e^(-dT) E[X_n^a] y^(-a) / D - 1
    // with m_k the exact cell discount masses and E[X_s^(1/2)] = e^(-s/8).
    GeometricBrownian m{1.0, 0.0, 1.0};
    double y = 0.25, delta = 1.0, alpha = 0.5;
    TimeGrid g = make_grid(16.0, 320);
    McParams mc{4096, g, 51};
    PolicyDescription pol;
    pol.shock = m;
    pol.fuel = ConstantFuel{10.0};
    pol.base = ScaledShock{1.0};
    pol.law = PlanLaw::frozen;
    MarkovState state{1.0, y, 10.0, y};
    Estimate e = supergradient(0.0, state, pol, ProfitModel{CobbDouglas{alpha}}, delta, mc);

    std::vector<double> masses = discount_cell_masses(g, delta);
    double dden = power_moment_denominator(alpha, m.mu, m.sigma, delta);
    double target = 0.0;
    for (int k = 0; k < g.n_steps; ++k)
        target += masses[static_cast<std::size_t>(k)] * std::exp(-g.node(k) / 8.0);
    target += std::exp(-delta * g.t_max) * std::exp(-g.t_max / 8.0) / dden;
    target = target * std::pow(y, -alpha) - 1.0;
    CHECK(std::fabs(e.mean - target) <= 3.0 * e.std_error);
    CHECK(e.tail_bound > 0.0);
}

TEST_CASE("supergradient far above the reflection level is the pure cost") {
    GeometricBrownian m{1.0, 0.0, 0.3};
    TimeGrid g = make_grid(12.0, 240);
    McParams mc{2048, g, 53};
    PolicyDescription pol;
    pol.shock = m;
    pol.fuel = ConstantFuel{2e6};
    pol.base = ScaledShock{0.8};
    pol.law = PlanLaw::reflection;
    MarkovState state{1.0, 1e6, 2e6, 1e6};
    Estimate e = supergradient(0.0, state, pol, ProfitModel{CobbDouglas{0.5}}, 1.0, mc);
    // R_y at capacity 1e6 is ~1e-3, so the estimate is -1 + O(1e-3)
    CHECK(std::fabs(e.mean + 1.0) < 3.0 * e.std_error + 5e-3);
}

TEST_CASE("supergradient validates its inputs") {
    PolicyDescription pol;
    pol.shock = GeometricBrownian{1.0, 0.0, 0.3};
    pol.fuel = ConstantFuel{1.0};
    pol.base = ScaledShock{0.8};
    MarkovState s{1.0, 0.5, 1.0, 0.5};
    McParams mc{64, make_grid(4.0, 16), 0};
    ProfitModel cd{CobbDouglas{0.5}};
    CHECK_THROWS_AS(supergradient(-1.0, s, pol, cd, 1.0, mc), std::invalid_argument);
    PolicyDescription rm = pol;
    rm.fuel = RunningMaxFuel{1.0, 0.0, 0.2};
    CHECK_THROWS_AS(supergradient(0.0, s, rm, cd, 1.0, mc), unsupported_model);
    PolicyDescription bad_beta = pol;
    bad_beta.beta = 0.0;
    CHECK_THROWS_AS(supergradient(0.0, s, bad_beta, cd, 1.0, mc), std::invalid_argument);
    McParams tiny{1, make_grid(4.0, 16), 0};
    CHECK_THROWS_AS(supergradient(0.0, s, pol, cd, 1.0, tiny), std::invalid_argument);
}

TEST_CASE("multiplier density lives exactly on the crossing set") {
    Scenario sc = cobb_single_small();
    TimeGrid g = make_grid(10.0, 200);
    ScenarioPaths paths = simulate_scenario(sc, g, 512, 13);
    MultiplierDensity md = lagrange_density(sc, paths);
    CHECK(md.orientation == 1);
    double theta0 = 1.6003521586157361;
    std::size_t on = 0;
    for (std::size_t p = 0; p < 512; ++p) {
        for (int k = 0; k <= 200; ++k) {
            bool crossing = paths.l_aggregate.at(p, k) > paths.theta.at(p, k);
            CHECK(md.on_support(p, k) == crossing);
            if (!crossing) {
                CHECK(md.at(p, k) == 0.0);  // identically zero off support
            } else {
                ++on;
                double expect = std::exp(-sc.delta * g.node(k)) *
                                (std::sqrt(paths.shock.at(p, k)) / std::sqrt(theta0) - sc.delta);
                CHECK(md.at(p, k) == doctest::Approx(expect).epsilon(1e-12));
                CHECK(md.at(p, k) > 0.0);
            }
        }
    }
    CHECK(on > 0);
}

TEST_CASE("the tracking multiplier is a nonpositive measure") {
    Scenario q = make_scenario(ScenarioTag::quadratic, ArithmeticBrownian{0.0}, ConstantFuel{1.0},
                               1.0, {Firm{0.5, 0.1}});
    TimeGrid g = make_grid(10.0, 200);
    ScenarioPaths paths = simulate_scenario(q, g, 512, 15);
    MultiplierDensity md = lagrange_density(q, paths);
    CHECK(md.orientation == -1);
    std::size_t on = 0;
    for (std::size_t p = 0; p < 512; ++p)
        for (int k = 0; k <= 200; ++k)
            if (md.on_support(p, k)) {
                ++on;
                CHECK(md.at(p, k) < 0.0);
            }
    CHECK(on > 0);
}

TEST_CASE("kkt report certifies the optimal plan and rejects a perturbed one") {
    Scenario sc = cobb_single_small();
    TimeGrid g = make_grid(12.0, 120);
    ScenarioPaths paths = simulate_scenario(sc, g, 192, 2);
    KktBudget budget;
    budget.outer_paths = 192;
    budget.inner_paths = 48;
    budget.taus = {0.0};

    InvestmentPlan plan = optimal_plan(sc, paths);
    MultiplierDensity md = lagrange_density(sc, paths);
    KktReport rep = kkt_report(sc, paths, plan, md, Perturbation::none, budget, 2);
    CHECK(rep.scenario == "cobb-single");
    CHECK(rep.orientation == 1);
    CHECK(rep.objective.mean > 0.0);
    REQUIRE(!rep.condition1.empty());
    CHECK(rep.condition1.front().name == "t=0");
    CHECK(rep.condition1.front().tau == 0.0);
    REQUIRE(rep.condition2.size() == 1);
    CHECK(rep.condition3.name == "complementarity");
    CHECK(rep.support_nodes > 0);
    CHECK(rep.containment_violations == 0);
    CHECK(rep.condition1_pass);
    CHECK(rep.condition2_pass);
    CHECK(rep.condition3_pass);
    CHECK(rep.verdict);

    InvestmentPlan bad = perturbed_plan(sc, paths, Perturbation::early_overinvest);
    KktReport worse = kkt_report(sc, paths, bad, md, Perturbation::early_overinvest, budget, 2);
    CHECK(!worse.condition2_pass);  // flat-off fails beyond the |J| floor
    CHECK(!worse.verdict);
}

TEST_CASE("kkt report rejects off-grid evaluation times") {
    Scenario sc = cobb_single_small();
    TimeGrid g = make_grid(4.0, 40);
    ScenarioPaths paths = simulate_scenario(sc, g, 16, 2);
    InvestmentPlan plan = optimal_plan(sc, paths);
    MultiplierDensity md = lagrange_density(sc, paths);
    KktBudget budget;
    budget.outer_paths = 16;
    budget.inner_paths = 4;
    budget.taus = {0.037};
    CHECK_THROWS_AS(kkt_report(sc, paths, plan, md, Perturbation::none, budget, 2),
                    std::invalid_argument);
}
