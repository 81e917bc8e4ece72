#pragma once

#include <stdexcept>
#include <string>

namespace pme {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class BracketError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown when an iterative method stops before meeting its tolerance.
class NonConvergence : public std::runtime_error {
public:
    NonConvergence(const std::string& where, const std::string& what, double best, double err_bound)
        : std::runtime_error(where + ": " + what), module_(where), best_(best), err_(err_bound) {}

    const std::string& module() const { return module_; }
    double best_estimate() const { return best_; }
    double error_bound() const { return err_; }

private:
    std::string module_;
    double best_;
    double err_;
};

}  // namespace pme
