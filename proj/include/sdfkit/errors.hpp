// errors.hpp — Exception hierarchy shared by all sdfkit modules

#pragma once

#include <stdexcept>
#include <string>

namespace sdfkit {

// Invalid arguments: violated preconditions, NaN samples, length mismatches.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Mathematically undefined regime (e.g. divergent low-frequency integrand).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Bad or incomplete configuration (unset conventions, unknown keys, unreadable files).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numerical failure: non-convergence, instability, divergence.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Adaptive quadrature ran out of subdivisions; carries the best estimate so far.
class QuadratureError : public NumericalError {
public:
    QuadratureError(const std::string& what, double estimate, double error_bound)
        : NumericalError(what), estimate_(estimate), error_bound_(error_bound) {}

    double estimate() const noexcept { return estimate_; }
    double error_bound() const noexcept { return error_bound_; }

private:
    double estimate_;
    double error_bound_;
};

} // namespace sdfkit
