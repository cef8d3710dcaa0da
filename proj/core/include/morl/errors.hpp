#pragma once

#include <stdexcept>
#include <string>

namespace morl {

// Process exit codes used by the CLI. Library code throws; tools map the
// exception type to the code.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitDivergence = 3,
    kExitBudget = 4,
};

/// Invalid configuration: bad files, dimension mismatches, out-of-range settings.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scalarization evaluated outside its domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A numeric iteration produced non-finite values.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, long iteration)
        : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
          iteration_(iteration) {}

    long iteration() const { return iteration_; }

private:
    long iteration_;
};

/// An exact computation would exceed its enumeration or shape budget.
class BudgetError : public std::runtime_error {
public:
    BudgetError(const std::string& what, double required_budget)
        : std::runtime_error(what + " (required budget " + std::to_string(required_budget) + ")"),
          required_budget_(required_budget) {}

    explicit BudgetError(const std::string& what)
        : std::runtime_error(what), required_budget_(0.0) {}

    double required_budget() const { return required_budget_; }

private:
    double required_budget_;
};

} // namespace morl
