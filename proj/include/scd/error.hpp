#pragma once

#include <stdexcept>
#include <string>

namespace scd {

// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Missing files, unreadable streams.
class IoError : public Error {
public:
    using Error::Error;
};

// Malformed file contents (PLY, PNG, JSON).
class ParseError : public Error {
public:
    using Error::Error;
};

// Values that break a documented precondition or invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace scd
