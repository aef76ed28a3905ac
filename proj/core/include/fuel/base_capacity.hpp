#pragma once

#include <variant>

#include "fuel/ensemble.hpp"
#include "fuel/estimate.hpp"
#include "fuel/profit.hpp"
#include "fuel/shocks.hpp"

namespace fuel {

/// Base capacity l(t) = k X(t) for a geometric shock; k > 0 is the
/// scale that makes the backward equation below hold.
struct ScaledShock {
    double k = 1.0;
};

/// Base capacity l(t) = W(t) - c for a Brownian shock; c > 0 is the offset
/// produced by quadratic_offset_c.
struct ShiftedBrownian {
    double c = 1.0;
};

using BaseCapacitySpec = std::variant<ScaledShock, ShiftedBrownian>;

void validate(const BaseCapacitySpec& spec);

/// Negative root of sigma^2 x^2 / 2 + b x - delta = 0.  Uses the conjugate
/// branch of the quadratic formula so no cancellation occurs for either sign
/// of b; the residual at the root is below 1e-12 * max(1, delta).
double negative_root(double b, double sigma, double delta);

/// k = [ (1/delta) gamma / (gamma - alpha) ]^(1/alpha) with gamma the
/// negative root above.  Postcondition k^(-alpha) > delta, i.e. the marginal
/// profit along l strictly exceeds the discount rate.
double cobb_douglas_k(double alpha, double b, double sigma, double delta);

/// Monte Carlo estimate of c = E[ integral_0^inf delta e^{-delta s}
/// sup_{0 <= u < s} W(u) ds ] for a standard Brownian motion.  The running
/// supremum is refined with bridge cell maxima and the cell integral uses the
/// trapezoid in the supremum with the exact discount mass, so the estimate
/// converges to the continuous-time value.  Requires e^{-delta t_max} < 1e-6.
Estimate quadratic_offset_c(double delta, const McParams& mc);

/// l(t_k) along each shock path.
PathEnsemble base_capacity_paths(const BaseCapacitySpec& spec, const PathEnsemble& shock);

/// How strongly the discounted marginal profit along the running supremum of
/// the base capacity deviates from the unit investment cost:
///
///   profit form   E[ integral_tau^inf e^{-delta s}
///                      R_y(X(s), sup_{tau <= u < s} l(u)) ds ] - e^{-delta tau}
///   cost form     E[ integral_tau^inf delta e^{-delta s}
///                      sup_{tau <= u < s} l(u) ds ] - e^{-delta tau} W(tau)
///
/// A correctly scaled base capacity drives the residual to zero for every
/// tau; the outer expectation averages over simulated time-tau states.  The
/// supremum is bridge-refined and the tail beyond t_max is added in closed
/// form for the profit case (frozen supremum), pathwise for the cost case.
Estimate representation_residual(const BaseCapacitySpec& spec, const ShockModel& shock,
                                 const ProfitModel& profit, double delta, double tau,
                                 const McParams& mc);

/// The residual conditioned on a time-tau state (shock value x, by the Markov
/// property simulated as a fresh start over the remaining horizon).  Used for
/// per-state spot checks; the unconditional operation above is its average.
Estimate representation_residual_from_state(const BaseCapacitySpec& spec, const ShockModel& shock,
                                            const ProfitModel& profit, double delta, double tau,
                                            double state_x, const McParams& mc);

}  // namespace fuel
