#pragma once

#include <stdexcept>
#include <string>

namespace lmg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Too few samples to form an average.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// A state component became non-finite during integration.
class IntegrationDivergedError : public Error {
public:
    IntegrationDivergedError(double time, const std::string& what)
        : Error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Hilbert-space dimension exceeds the dense storage cap.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Quantum propagation lost unitarity; the caller should shrink dt.
class StepSizeError : public Error {
public:
    using Error::Error;
};

/// A root bracket or eigensolver failed.
class NumericSolveError : public Error {
public:
    using Error::Error;
};

/// A bifurcation curve never crosses the detection threshold.
class NoTransitionError : public Error {
public:
    using Error::Error;
};

/// Invalid user-supplied configuration.
class ValidationError : public Error {
public:
    using Error::Error;
};

} // namespace lmg
