#pragma once

#include <stdexcept>
#include <string>

namespace curbflow {

/// Base class for all curbflow errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad inputs: out-of-domain arguments, malformed files, schema violations.
/// The CLI maps these to exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Numeric failures: bracketing exhausted, fixed point did not converge.
/// The CLI maps these (and subclasses) to exit code 3.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Offered load at or beyond capacity where a stable solution requires
/// exogenous arrivals strictly below total service capacity.
class InstabilityError : public NumericError {
public:
    using NumericError::NumericError;
};

/// A congestion cap that no admissible price can satisfy.
class InfeasibleError : public NumericError {
public:
    using NumericError::NumericError;
};

} // namespace curbflow
