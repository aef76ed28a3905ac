#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fuel/errors.hpp"
#include "fuel/parallel.hpp"
#include "fuel/shocks.hpp"

using namespace fuel;

TEST_CASE("model validation rejects out-of-domain parameters") {
    CHECK_THROWS_AS(validate(ShockModel{GeometricBrownian{0.0, 0.0, 0.3}}), std::invalid_argument);
    CHECK_THROWS_AS(validate(ShockModel{GeometricBrownian{1.0, 0.0, -0.1}}), std::invalid_argument);
    CHECK_THROWS_AS(validate(FuelModel{ConstantFuel{0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(validate(FuelModel{AffineFuel{1.0, -0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(validate(FuelModel{RunningMaxFuel{1.0, 0.0, -1.0}}), std::invalid_argument);
}

TEST_CASE("deterministic fuel evaluates in closed form, stochastic refuses") {
    CHECK(fuel_at(FuelModel{ConstantFuel{2.5}}, 7.0) == 2.5);
    AffineFuel a{1.0, 0.05};
    CHECK(fuel_at(FuelModel{a}, 4.0) == a.theta0 + a.rate * 4.0);
    CHECK(fuel_is_deterministic(FuelModel{a}));
    CHECK(!fuel_is_deterministic(FuelModel{RunningMaxFuel{1.0, 0.0, 0.2}}));
    CHECK_THROWS_AS(fuel_at(FuelModel{RunningMaxFuel{1.0, 0.0, 0.2}}, 1.0), unsupported_model);
    CHECK(fuel_initial(FuelModel{RunningMaxFuel{3.0, 0.0, 0.2}}) == 3.0);
}

TEST_CASE("zero-volatility geometric shock is its deterministic mean path") {
    TimeGrid g = make_grid(2.0, 10);
    PathEnsemble e = simulate_shock(GeometricBrownian{2.0, 0.3, 0.0}, g, 3, 17);
    for (std::size_t p = 0; p < 3; ++p)
        for (int k = 0; k <= 10; ++k)
            CHECK(e.at(p, k) == doctest::Approx(2.0 * std::exp(0.3 * g.node(k))).epsilon(1e-13));
}

TEST_CASE("geometric shock matches its exact node transition") {
    TimeGrid g = make_grid(4.0, 64);
    GeometricBrownian m{1.5, 0.1, 0.4};
    PathEnsemble e = simulate_shock(m, g, 8, 5);
    // Recover the driving normal from one step and check the next step uses
    // the same exponential-Euler map (exact in distribution for this model).
    double dt = g.dt();
    for (std::size_t p = 0; p < 8; ++p) {
        for (int k = 0; k < 64; ++k) {
            double ratio = e.at(p, k + 1) / e.at(p, k);
            double z = (std::log(ratio) - (m.mu - 0.5 * m.sigma * m.sigma) * dt) /
                       (m.sigma * std::sqrt(dt));
            CHECK(std::isfinite(z));
            CHECK(std::fabs(z) < 6.0);  // a 6-sigma step would be astronomically unlikely
            CHECK(e.at(p, k + 1) > 0.0);
        }
    }
}

TEST_CASE("geometric shock mean matches x0 exp(mu t) within noise") {
    TimeGrid g = make_grid(2.0, 50);
    GeometricBrownian m{1.0, 0.2, 0.3};
    const std::size_t n = 20000;
    PathEnsemble e = simulate_shock(m, g, n, 11);
    double mean = 0.0, sq = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        mean += e.at(p, 50);
        sq += e.at(p, 50) * e.at(p, 50);
    }
    mean /= static_cast<double>(n);
    double se = std::sqrt((sq / static_cast<double>(n) - mean * mean) / static_cast<double>(n));
    CHECK(std::fabs(mean - std::exp(0.2 * 2.0)) < 4.0 * se);
}

TEST_CASE("brownian shock has independent increments with variance dt") {
    TimeGrid g = make_grid(1.0, 20);
    const std::size_t n = 20000;
    PathEnsemble e = simulate_shock(ArithmeticBrownian{0.5}, g, n, 23);
    double var = 0.0, cross = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        CHECK(e.at(p, 0) == 0.5);
        double d1 = e.at(p, 7) - e.at(p, 6);
        double d2 = e.at(p, 8) - e.at(p, 7);
        var += d1 * d1;
        cross += d1 * d2;
    }
    var /= static_cast<double>(n);
    cross /= static_cast<double>(n);
    CHECK(std::fabs(var - g.dt()) < 5.0 * g.dt() * std::sqrt(2.0 / static_cast<double>(n)));
    CHECK(std::fabs(cross) < 5.0 * g.dt() / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("ensembles regenerate row by row from the path generator") {
    TimeGrid g = make_grid(3.0, 30);
    GeometricBrownian m{1.0, 0.0, 0.25};
    PathEnsemble e = simulate_shock(m, g, 16, 99);
    std::vector<double> row(static_cast<std::size_t>(g.n_nodes()));
    for (std::size_t p = 0; p < 16; ++p) {
        generate_shock_path(m, g, 99, p, row.data());
        for (int k = 0; k <= 30; ++k) CHECK(e.at(p, k) == row[static_cast<std::size_t>(k)]);
    }
}

TEST_CASE("thread cap never changes simulated values") {
    TimeGrid g = make_grid(2.0, 40);
    int saved = thread_cap();
    thread_cap() = 1;
    PathEnsemble serial = simulate_shock(GeometricBrownian{1.0, 0.1, 0.3}, g, 64, 7);
    PathEnsemble fuel_serial = simulate_fuel(RunningMaxFuel{1.0, 0.05, 0.2}, g, 64, 7);
    thread_cap() = 5;
    PathEnsemble wide = simulate_shock(GeometricBrownian{1.0, 0.1, 0.3}, g, 64, 7);
    PathEnsemble fuel_wide = simulate_fuel(RunningMaxFuel{1.0, 0.05, 0.2}, g, 64, 7);
    thread_cap() = saved;
    REQUIRE(serial.values.size() == wide.values.size());
    for (std::size_t i = 0; i < serial.values.size(); ++i) {
        CHECK(serial.values[i] == wide.values[i]);
        CHECK(fuel_serial.values[i] == fuel_wide.values[i]);
    }
}

TEST_CASE("fuel paths start at theta0 and never decrease") {
    TimeGrid g = make_grid(5.0, 50);
    for (FuelModel m : {FuelModel{ConstantFuel{1.5}}, FuelModel{AffineFuel{1.0, 0.2}},
                        FuelModel{RunningMaxFuel{2.0, 0.1, 0.4}}}) {
        PathEnsemble e = simulate_fuel(m, g, 32, 13);
        for (std::size_t p = 0; p < 32; ++p) {
            CHECK(e.at(p, 0) == fuel_initial(m));
            for (int k = 0; k < 50; ++k) CHECK(e.at(p, k + 1) >= e.at(p, k));
        }
    }
}

TEST_CASE("affine fuel is the exact line through its nodes") {
    TimeGrid g = make_grid(5.0, 50);
    AffineFuel a{1.25, 0.075};
    PathEnsemble e = simulate_fuel(a, g, 4, 0);
    for (std::size_t p = 0; p < 4; ++p)
        for (int k = 0; k <= 50; ++k) CHECK(e.at(p, k) == a.theta0 + a.rate * g.node(k));
}

TEST_CASE("running-max fuel is driven independently of the shock") {
    // same master seed, disjoint streams: the fuel signal must not reuse the
    // shock's draws, or every scenario couples its constraint to its revenue
    TimeGrid g = make_grid(1.0, 10);
    PathEnsemble shock = simulate_shock(GeometricBrownian{1.0, 0.0, 0.3}, g, 256, 3);
    PathEnsemble fuel = simulate_fuel(RunningMaxFuel{1.0, 0.0, 0.3}, g, 256, 3);
    std::size_t equal = 0;
    for (std::size_t p = 0; p < 256; ++p)
        if (shock.at(p, 10) == fuel.at(p, 10)) ++equal;
    CHECK(equal == 0);
}

TEST_CASE("cell maxima dominate both endpoints bitwise") {
    TimeGrid g = make_grid(2.0, 40);
    for (ShockModel m : {ShockModel{GeometricBrownian{1.0, 0.05, 0.35}},
                         ShockModel{ArithmeticBrownian{0.0}}}) {
        PathEnsemble e = simulate_shock(m, g, 64, 21);
        std::vector<double> sup(40);
        for (std::size_t p = 0; p < 64; ++p) {
            const double* nodes = e.row(p);
            generate_cell_maxima(m, g, 21, p, nodes, sup.data());
            for (int k = 0; k < 40; ++k) {
                double hi = nodes[k] > nodes[k + 1] ? nodes[k] : nodes[k + 1];
                CHECK(sup[static_cast<std::size_t>(k)] >= hi);
            }
        }
    }
}

TEST_CASE("zero-volatility cell maxima are the endpoint maxima exactly") {
    TimeGrid g = make_grid(2.0, 20);
    GeometricBrownian m{1.0, -0.3, 0.0};
    PathEnsemble e = simulate_shock(m, g, 2, 1);
    std::vector<double> sup(20);
    for (std::size_t p = 0; p < 2; ++p) {
        const double* nodes = e.row(p);
        generate_cell_maxima(m, g, 1, p, nodes, sup.data());
        for (int k = 0; k < 20; ++k) {
            double hi = nodes[k] > nodes[k + 1] ? nodes[k] : nodes[k + 1];
            CHECK(sup[static_cast<std::size_t>(k)] == hi);
        }
    }
}

TEST_CASE("bridge maxima reproduce the pinned-cell mean") {
    // For a Brownian cell pinned at zero on both ends the maximum has tail
    // P(M > m) = exp(-2 m^2 / dt), hence E[M] = sqrt(pi dt / 8).
    double dt = 0.25;
    TimeGrid g = make_grid(dt, 1);
    ArithmeticBrownian m{0.0};
    const std::size_t n = 200000;
    double nodes[2] = {0.0, 0.0};
    double mean = 0.0, sq = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        double sup = 0.0;
        generate_cell_maxima(m, g, 31, p, nodes, &sup);
        mean += sup;
        sq += sup * sup;
    }
    mean /= static_cast<double>(n);
    double se = std::sqrt((sq / static_cast<double>(n) - mean * mean) / static_cast<double>(n));
    CHECK(std::fabs(mean - std::sqrt(3.14159265358979323846 * dt / 8.0)) < 4.0 * se);
}
