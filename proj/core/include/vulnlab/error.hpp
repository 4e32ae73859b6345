#pragma once

#include <stdexcept>
#include <string>

namespace vulnlab {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input violates a documented precondition (bad probabilities, bad hazard, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// A denominator that must be positive vanished, or an internal identity broke.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Exhaustive enumeration would exceed the configured cap.
class CapExceeded : public Error {
public:
    using Error::Error;
};

}  // namespace vulnlab
