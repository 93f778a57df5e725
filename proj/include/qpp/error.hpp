#pragma once

#include <stdexcept>
#include <string>

namespace qpp {

// Base class for every error raised by the library. Callers that only care
// about "something went wrong in qpp" catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input value or precondition violation (non-unitary matrix, negative
// loss, out-of-range voltage, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed composite object, e.g. MeshSettings with the wrong cell set.
class StructuralError : public Error {
public:
    using Error::Error;
};

class LookupError : public Error {
public:
    using Error::Error;
};

// Fit has no unique solution (dead heater, too little phase span, ...).
class FitDegeneracyError : public Error {
public:
    using Error::Error;
};

// No 2*pi branch assignment keeps every heater power inside its range.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

// HOM scan has no points far enough from the dip to define a baseline.
class BaselineUndefinedError : public Error {
public:
    using Error::Error;
};

}  // namespace qpp
