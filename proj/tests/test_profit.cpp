#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "fuel/errors.hpp"
#include "fuel/profit.hpp"

using namespace fuel;

TEST_CASE("cobb-douglas values and marginals") {
    CobbDouglas cd{0.5};
    CHECK(profit_value(cd, 1.0, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(profit_value(cd, 4.0, 1.0) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(profit_value(cd, 1.0, 4.0) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(profit_value(cd, 2.0, 0.0) == 0.0);
    CHECK(marginal_profit(cd, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(marginal_profit(cd, 4.0, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(marginal_profit(cd, 1.0, 4.0) == doctest::Approx(0.5).epsilon(1e-15));

    CobbDouglas skew{0.25};
    // R = x^a y^(1-a) / (1-a) and R_y = (x/y)^a, spot-checked off the diagonal
    CHECK(profit_value(skew, 16.0, 1.0) == doctest::Approx(2.0 / 0.75).epsilon(1e-15));
    CHECK(marginal_profit(skew, 16.0, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("marginal profit diverges at zero capacity, so it is refused") {
    CHECK_THROWS_AS(marginal_profit(ProfitModel{CobbDouglas{0.5}}, 1.0, 0.0),
                    std::invalid_argument);
}

TEST_CASE("quadratic tracking cost and its derivative") {
    QuadraticTracking q;
    CHECK(profit_value(q, 3.0, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(profit_value(q, 1.0, 1.0) == 0.0);
    CHECK(marginal_profit(q, 3.0, 1.0) == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(marginal_profit(q, 1.0, 3.0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("orientation separates profits from costs") {
    CHECK(orientation(ProfitModel{CobbDouglas{0.5}}) == 1);
    CHECK(orientation(ProfitModel{QuadraticTracking{}}) == -1);
}

TEST_CASE("profit validation pins alpha inside the open unit interval") {
    CHECK_THROWS_AS(validate(ProfitModel{CobbDouglas{0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(validate(ProfitModel{CobbDouglas{1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(validate(ProfitModel{CobbDouglas{1.5}}), std::invalid_argument);
    CHECK_NOTHROW(validate(ProfitModel{CobbDouglas{0.5}}));
    CHECK_THROWS_AS(validate(Discount{0.0}), std::invalid_argument);
    CHECK_THROWS_AS(validate(Discount{-1.0}), std::invalid_argument);
}

TEST_CASE("discounted power moment matches its closed form") {
    // E int e^{-delta s} X^alpha ds = x^alpha / D with
    // D = delta - mu alpha + sigma^2 alpha (1 - alpha) / 2.
    CHECK(power_moment_denominator(0.5, 0.0, std::sqrt(2.0), 1.0) ==
          doctest::Approx(1.25).epsilon(1e-15));
    CHECK(discounted_power_moment(1.0, 0.5, 0.0, std::sqrt(2.0), 1.0) ==
          doctest::Approx(0.8).epsilon(1e-15));
    CHECK(discounted_power_moment(4.0, 0.5, 0.0, std::sqrt(2.0), 1.0) ==
          doctest::Approx(1.6).epsilon(1e-15));
    CHECK(discounted_power_moment(1.0, 0.5, 0.0, 1.0, 1.0) ==
          doctest::Approx(1.0 / 1.125).epsilon(1e-15));
}

TEST_CASE("power moment quadrature cross-check") {
    // Independent route: integrate e^{-delta s} E[X_s^alpha] by Simpson with
    // E[X_s^alpha] = x^alpha exp((mu alpha - sigma^2 alpha (1-alpha)/2) s).
    double x = 2.0, alpha = 0.3, mu = 0.1, sigma = 0.6, delta = 0.9;
    double rate = mu * alpha - 0.5 * sigma * sigma * alpha * (1.0 - alpha);
    auto f = [&](double s) { return std::exp(-delta * s) * std::pow(x, alpha) * std::exp(rate * s); };
    double T = 80.0;
    int n = 20000;
    double h = T / n, acc = f(0.0) + f(T);
    for (int i = 1; i < n; ++i) acc += f(i * h) * (i % 2 ? 4.0 : 2.0);
    acc *= h / 3.0;
    CHECK(discounted_power_moment(x, alpha, mu, sigma, delta) ==
          doctest::Approx(acc).epsilon(1e-9));
}

TEST_CASE("diverging moments raise integrability errors") {
    // delta - mu alpha + sigma^2 alpha (1-alpha)/2 <= 0 has no finite integral
    CHECK_THROWS_AS(power_moment_denominator(0.9, 3.0, 0.1, 1.0), integrability_error);
    CHECK_THROWS_AS(discounted_power_moment(1.0, 0.9, 3.0, 0.1, 1.0), integrability_error);
    CHECK_NOTHROW(power_moment_denominator(0.9, 1.0, 0.1, 1.0));
}
