#pragma once

#include <stdexcept>
#include <string>

namespace dmpa {

/// Base of every error raised by the library. Domain errors (instability,
/// non-convergence, unsupported configurations) derive from DomainError;
/// malformed input derives from UsageError.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class ValidationError : public UsageError {
public:
    using UsageError::UsageError;
};

class InstabilityError : public DomainError {
public:
    InstabilityError(const std::string& what, double time)
        : DomainError(what), time_(time) {}
    explicit InstabilityError(const std::string& what)
        : DomainError(what), time_(0.0) {}

    /// Simulation time at which divergence was detected (0 when not time-resolved).
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// A covariance with non-positive determinant where a physical state is required.
class InvalidStateError : public DomainError {
public:
    using DomainError::DomainError;
};

class UnsupportedConfiguration : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace dmpa
