#include "fuel/profit.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fuel/errors.hpp"

namespace fuel {

void validate(const ProfitModel& model) {
    if (const auto* cd = std::get_if<CobbDouglas>(&model)) {
        if (!(cd->alpha > 0.0 && cd->alpha < 1.0) || !std::isfinite(cd->alpha))
            throw std::invalid_argument("profit.alpha must lie in the open interval (0, 1), got " +
                                        std::to_string(cd->alpha));
    }
}

int orientation(const ProfitModel& model) {
    return std::holds_alternative<CobbDouglas>(model) ? +1 : -1;
}

double profit_value(const ProfitModel& model, double x, double y) {
    if (y < 0.0) throw std::invalid_argument("profit_value: capacity y must be >= 0");
    if (const auto* cd = std::get_if<CobbDouglas>(&model)) {
        if (!(x > 0.0)) throw std::invalid_argument("profit_value: x must be > 0");
        if (y == 0.0) return 0.0;
        return std::pow(x, cd->alpha) * std::pow(y, 1.0 - cd->alpha) / (1.0 - cd->alpha);
    }
    double d = x - y;
    return 0.5 * d * d;
}

double marginal_profit(const ProfitModel& model, double x, double y) {
    if (const auto* cd = std::get_if<CobbDouglas>(&model)) {
        if (!(x > 0.0)) throw std::invalid_argument("marginal_profit: x must be > 0");
        // the marginal profit blows up at y = 0; callers must stay interior
        if (!(y > 0.0))
            throw std::invalid_argument("marginal_profit: capacity y must be > 0 for Cobb-Douglas");
        return std::pow(x, cd->alpha) * std::pow(y, -cd->alpha);
    }
    if (y < 0.0) throw std::invalid_argument("marginal_profit: capacity y must be >= 0");
    return -(x - y);
}

void validate(const Discount& d) {
    if (!(d.delta > 0.0) || !std::isfinite(d.delta))
        throw std::invalid_argument("discount.delta must be > 0, got " + std::to_string(d.delta));
}

double power_moment_denominator(double alpha, double mu, double sigma, double delta) {
    double d = (delta - mu * alpha) + 0.5 * sigma * sigma * alpha * (1.0 - alpha);
    if (!(d > 0.0))
        throw integrability_error(
            "discounted power moment diverges: (delta - mu*alpha) + sigma^2*alpha*(1-alpha)/2 = " +
            std::to_string(d) + " must be > 0");
    return d;
}

double discounted_power_moment(double x, double alpha, double mu, double sigma, double delta) {
    if (!(x > 0.0)) throw std::invalid_argument("discounted_power_moment: x must be > 0");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("discounted_power_moment: alpha must lie in (0, 1)");
    double d = power_moment_denominator(alpha, mu, sigma, delta);
    return std::pow(x, alpha) / d;
}

}  // namespace fuel
