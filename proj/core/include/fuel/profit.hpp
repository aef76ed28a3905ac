#pragma once

#include <variant>

namespace fuel {

/// Operating profit R(x, y) = x^alpha y^(1-alpha) / (1-alpha), alpha in (0,1).
/// Strictly concave and increasing in capacity y, with R_y(x, y) -> +inf as
/// y -> 0 (so a zero-capacity marginal profit is an error, not a value).
struct CobbDouglas {
    double alpha = 0.5;
};

/// Running cost (x - y)^2 / 2 to be minimized; the objective weights it by
/// delta e^{-delta s} so a frozen plan has a finite cost.
struct QuadraticTracking {};

using ProfitModel = std::variant<CobbDouglas, QuadraticTracking>;

void validate(const ProfitModel& model);

/// +1 when the objective built on this model is maximized, -1 when minimized.
int orientation(const ProfitModel& model);

/// R(x, y) resp. the tracking cost at (x, y).  Requires y >= 0 (and x > 0 for
/// Cobb-Douglas); y = 0 is a valid capacity with R = 0.
double profit_value(const ProfitModel& model, double x, double y);

/// dR/dy resp. d(cost)/dy = -(x - y).  Requires y > 0 for Cobb-Douglas.
double marginal_profit(const ProfitModel& model, double x, double y);

struct Discount {
    double delta = 1.0;
};

void validate(const Discount& d);

/// E[ integral_0^inf e^{-delta s} X(s)^alpha ds ] for a geometric Brownian
/// shock started at x, which equals x^alpha / D with
///   D = (delta - mu alpha) + sigma^2 alpha (1-alpha) / 2.
/// Throws integrability_error when D <= 0 (the moment diverges).
double discounted_power_moment(double x, double alpha, double mu, double sigma, double delta);

/// The denominator D above; the integrability guard shared by every tail
/// formula.  Throws integrability_error when D <= 0.
double power_moment_denominator(double alpha, double mu, double sigma, double delta);

}  // namespace fuel
