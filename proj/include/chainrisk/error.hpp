#pragma once

#include <stdexcept>
#include <string>

namespace chainrisk {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A documented precondition of a solver does not hold (e.g. alpha * rho(G) >= 1).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Singular or otherwise numerically unusable system.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative method hit its iteration cap. Carries the last residual seen.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual, long iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    long iterations() const noexcept { return iterations_; }

private:
    double residual_;
    long iterations_;
};

/// A property the model guarantees was not observed.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Bad experiment configuration (file contents, flags, or an instance that fails its gate).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace chainrisk
