#pragma once

#include <stdexcept>
#include <string>

namespace fuel {

// Thrown when a discounted moment fails to exist for the requested
// parameters (the effective discount net of growth is not positive).
struct integrability_error : std::domain_error {
    explicit integrability_error(const std::string& what) : std::domain_error(what) {}
};

// Thrown when a truncation horizon is too short for the operation's
// stated accuracy contract.
struct tail_bound_error : std::runtime_error {
    explicit tail_bound_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by lattice construction when the step probability leaves (0,1).
struct unstable_discretization : std::runtime_error {
    explicit unstable_discretization(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a dynamic-programming state space would exceed the memory budget.
struct budget_exceeded : std::runtime_error {
    explicit budget_exceeded(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an operation requires a Markov fuel description and the
// configured fuel process does not provide one.
struct unsupported_model : std::runtime_error {
    explicit unsupported_model(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when initial capacities already exhaust the fuel budget.
struct infeasible_initialization : std::invalid_argument {
    explicit infeasible_initialization(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace fuel
