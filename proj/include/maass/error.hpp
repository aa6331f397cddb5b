#pragma once

#include <stdexcept>
#include <string>

namespace maass {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of an operation (negative radius,
/// division by a ball containing zero, non-squarefree level, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// The working precision is too low to decide a comparison or reach a target.
class PrecisionError : public Error {
public:
    using Error::Error;
};

/// A linear system is singular or too ill-conditioned at working precision.
class SingularSystemError : public Error {
public:
    using Error::Error;
};

/// A bracket lost its sign change, or its sign change comes from a pole.
class SpuriousBracketError : public Error {
public:
    using Error::Error;
};

/// Malformed MAASS/1 document.
class FormatError : public Error {
public:
    FormatError(const std::string& what, int line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    int line() const { return line_; }

private:
    int line_;
};

} // namespace maass
