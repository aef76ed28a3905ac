#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "fuel/base_capacity.hpp"
#include "fuel/errors.hpp"
#include "fuel/rng.hpp"

using namespace fuel;

TEST_CASE("negative root solves its quadratic to near machine precision") {
    for (double b : {-2.0, -0.045, 0.0, 0.5, 3.0}) {
        for (double sigma : {0.05, 0.3, 1.0, 2.5}) {
            for (double delta : {0.1, 1.0, 4.0}) {
                double g = negative_root(b, sigma, delta);
                CHECK(g < 0.0);
                double residual = 0.5 * sigma * sigma * g * g + b * g - delta;
                CHECK(std::fabs(residual) <= 1e-12 * std::max(1.0, delta));
            }
        }
    }
}

TEST_CASE("negative root hand anchors") {
    // sigma = 1, b = 1/2, delta = 1:  x^2 + x - 2 = 0  ->  -2 exactly
    CHECK(negative_root(0.5, 1.0, 1.0) == -2.0);
    // sigma = sqrt(2), b = 0, delta = 1:  x^2 = 1  ->  -1
    CHECK(negative_root(0.0, std::sqrt(2.0), 1.0) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("capacity scale hand anchors") {
    // gamma = -1 (above) gives k = [gamma / (gamma - alpha)]^(1/alpha)
    //   alpha = 1/2: (1 / 1.5)^2 = 4/9
    CHECK(cobb_douglas_k(0.5, 0.0, std::sqrt(2.0), 1.0) == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
    // gamma = -2: (2 / 2.5)^2 = 0.64
    CHECK(cobb_douglas_k(0.5, 0.5, 1.0, 1.0) == doctest::Approx(0.64).epsilon(1e-15));
}

TEST_CASE("the scale keeps marginal profit above the discount rate") {
    UniformStream u(2024, rng::oracle_draws, 0);
    for (int i = 0; i < 400; ++i) {
        double alpha = 0.05 + 0.9 * u.next();
        double b = -1.0 + 2.0 * u.next();
        double sigma = 0.05 + 1.95 * u.next();
        double delta = 0.1 + 4.9 * u.next();
        double k = cobb_douglas_k(alpha, b, sigma, delta);
        CHECK(k > 0.0);
        CHECK(std::pow(k, -alpha) > delta);  // exact, no tolerance
    }
}

TEST_CASE("base capacity paths are exact images of the shock") {
    TimeGrid g = make_grid(2.0, 25);
    PathEnsemble shock = simulate_shock(GeometricBrownian{1.0, 0.0, 0.4}, g, 16, 3);
    PathEnsemble l = base_capacity_paths(ScaledShock{0.7}, shock);
    for (std::size_t i = 0; i < shock.values.size(); ++i)
        CHECK(l.values[i] == 0.7 * shock.values[i]);

    PathEnsemble w = simulate_shock(ArithmeticBrownian{0.0}, g, 16, 3);
    PathEnsemble lw = base_capacity_paths(ShiftedBrownian{0.25}, w);
    for (std::size_t i = 0; i < w.values.size(); ++i) CHECK(lw.values[i] == w.values[i] - 0.25);
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(validate(BaseCapacitySpec{ScaledShock{0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(validate(BaseCapacitySpec{ShiftedBrownian{-1.0}}), std::invalid_argument);
    CHECK_NOTHROW(validate(BaseCapacitySpec{ScaledShock{0.5}}));
}

// Independent oracle for the tracking offset: at an exponential(delta) time
// tau the running maximum of a Brownian motion has the law of sqrt(tau) |Z|,
// so E[M] = E sqrt(tau) E|Z| = sqrt(pi/delta)/2 * sqrt(2/pi) = 1/sqrt(2 delta).
// The draw below shares nothing with quadratic_offset_c's grid construction.
static void check_offset(double delta) {
    const std::size_t n = 400000;
    UniformStream u(77, rng::offset_calibration, 1);
    NormalStream z(77, rng::offset_calibration, 2);
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double tau = -std::log(u.next()) / delta;
        double m = std::sqrt(tau) * std::fabs(z.next());
        mean += m;
        sq += m * m;
    }
    mean /= static_cast<double>(n);
    double se = std::sqrt((sq / static_cast<double>(n) - mean * mean) / static_cast<double>(n));
    double target = 1.0 / std::sqrt(2.0 * delta);
    CHECK(std::fabs(mean - target) < 4.0 * se);

    TimeGrid grid = make_grid(16.0 / delta, 800);
    Estimate c = quadratic_offset_c(delta, {8192, grid, 7});
    CHECK(c.n_paths == 8192);
    CHECK(c.std_error > 0.0);
    CHECK(std::fabs(c.mean - target) < 3.0 * c.std_error + c.tail_bound);
}

TEST_CASE("tracking offset matches 1/sqrt(2 delta) and its time-max oracle") {
    check_offset(0.5);
    check_offset(1.0);
    check_offset(2.0);
}

TEST_CASE("offset estimation refuses a horizon that clips the tail") {
    CHECK_THROWS_AS(quadratic_offset_c(1.0, {1024, make_grid(4.0, 100), 0}), tail_bound_error);
}

TEST_CASE("representation residual vanishes at the correct scale") {
    GeometricBrownian shock{1.0, 0.0, 0.3};
    double b = shock.mu - 0.5 * shock.sigma * shock.sigma;
    double k = cobb_douglas_k(0.5, b, shock.sigma, 1.0);
    McParams mc{3000, make_grid(16.0, 400), 19};
    CobbDouglas cd{0.5};

    Estimate at_scale = representation_residual(ScaledShock{k}, shock, cd, 1.0, 0.0, mc);
    CHECK(std::fabs(at_scale.mean) <= 3.0 * at_scale.std_error + at_scale.tail_bound);

    // Overshooting the scale raises the reflection level, which lowers the
    // marginal profit along it: the residual must go significantly negative.
    Estimate high = representation_residual(ScaledShock{1.5 * k}, shock, cd, 1.0, 0.0, mc);
    CHECK(high.mean < -3.0 * high.std_error);
    Estimate low = representation_residual(ScaledShock{0.5 * k}, shock, cd, 1.0, 0.0, mc);
    CHECK(low.mean > 3.0 * low.std_error);
}

TEST_CASE("representation residual in cost form for the tracking problem") {
    double delta = 1.0;
    double c = 1.0 / std::sqrt(2.0 * delta);
    McParams mc{4000, make_grid(16.0, 400), 23};
    Estimate e = representation_residual(ShiftedBrownian{c}, ArithmeticBrownian{0.0},
                                         QuadraticTracking{}, delta, 0.0, mc);
    CHECK(std::fabs(e.mean) <= 3.0 * e.std_error + e.tail_bound);

    Estimate off = representation_residual(ShiftedBrownian{2.0 * c}, ArithmeticBrownian{0.0},
                                           QuadraticTracking{}, delta, 0.0, mc);
    CHECK(std::fabs(off.mean) > 3.0 * off.std_error);
}

TEST_CASE("conditioned residual agrees with the unconditional one at tau 0") {
    GeometricBrownian shock{1.0, 0.0, 0.3};
    double k = cobb_douglas_k(0.5, -0.045, 0.3, 1.0);
    McParams mc{3000, make_grid(16.0, 400), 29};
    Estimate from_state = representation_residual_from_state(ScaledShock{k}, shock,
                                                             CobbDouglas{0.5}, 1.0, 0.0, 1.0, mc);
    Estimate plain = representation_residual(ScaledShock{k}, shock, CobbDouglas{0.5}, 1.0, 0.0, mc);
    // at tau = 0 the only time-0 state is x0 itself
    double spread = 3.0 * (from_state.std_error + plain.std_error) + from_state.tail_bound +
                    plain.tail_bound;
    CHECK(std::fabs(from_state.mean - plain.mean) <= spread);
}
