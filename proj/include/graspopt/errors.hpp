#pragma once

#include <stdexcept>
#include <string>

namespace graspopt {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed document; the message names the offending field.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Well-formed document describing an impossible structure (cycles, empty ranges).
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Precondition violated by an argument (non-unit quaternion, NaN coordinate, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Failure while running a well-formed job (I/O, broken internal invariant).
class RuntimeError : public Error {
public:
    using Error::Error;
};

}  // namespace graspopt
