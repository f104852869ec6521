#pragma once

#include <stdexcept>
#include <string>

namespace spectrack {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Mismatched or unusable dimensions / lengths.
class SizeError : public Error {
public:
    using Error::Error;
};

/// A number or record could not be parsed.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line) : Error(what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Structurally malformed input (inconsistent columns, empty file, ...).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A configuration violates its invariants.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Numerical failure (non-convergence, unsolvable bisection, ...).
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what, double residual = 0.0)
        : Error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

/// Out-of-order input in a stream that requires ordering.
class SequencingError : public Error {
public:
    SequencingError(const std::string& what, std::size_t index) : Error(what), index_(index) {}
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

/// A reference map too degenerate to operate on.
class DegenerateMapError : public Error {
public:
    using Error::Error;
};

/// Bad run configuration at the command level.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace spectrack
