#pragma once

#include <stdexcept>
#include <string>

namespace scbf {

/// Invalid or inconsistent configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Formula evaluated outside its domain (singular exponent etc.).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Base for failures of the time integrator (CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double last_good_time)
        : std::runtime_error(what), last_good_time_(last_good_time) {}
    double last_good_time() const noexcept { return last_good_time_; }

private:
    double last_good_time_;
};

/// Explicit step would exceed the advective stability limit.
class CflError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Non-finite values appeared even after sub-stepping.
class BlowUpError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Too few usable samples for a rate fit.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace scbf
