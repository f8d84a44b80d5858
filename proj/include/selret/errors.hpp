#pragma once

#include <stdexcept>
#include <string>

namespace selret {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Violated precondition or out-of-domain argument (bad temperature,
// zero-norm vector, index out of range, ...).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(what) {}
};

// Malformed or inconsistent input data; carries enough context to point
// at the offending line/record.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

// Numeric failure after the usual safeguards (factorization breakdown,
// non-finite intermediate).
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(what) {}
};

// Filesystem / stream failure, with the path in the message.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace selret
