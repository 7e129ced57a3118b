#pragma once

#include <stdexcept>
#include <string>

namespace avrsafe {

// Base for every error raised by the library. Callers that only need to
// report a message can catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed MDP or LP data (row mass, absorbing rule, dimensions).
class StructuralError : public Error {
public:
    using Error::Error;
};

// A solver produced values outside their admissible range.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Invalid physical or algorithmic parameter.
class ParameterError : public Error {
public:
    using Error::Error;
};

// Unreadable or inconsistent configuration file.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Instance exceeds the size an exhaustive oracle is allowed to handle.
class GuardError : public Error {
public:
    using Error::Error;
};

// A level-set ratio was requested but no state is safe with probability one.
class EmptySafeSetError : public Error {
public:
    using Error::Error;
};

// Bad command line or missing input artifact.
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace avrsafe
