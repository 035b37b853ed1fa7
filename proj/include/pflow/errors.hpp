#pragma once

#include <stdexcept>
#include <string>

namespace pflow {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Arrays that should share a grid do not.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// An argument lies outside the domain of the operation (negative density,
/// nonpositive weight, support reaching the domain margin, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class StepSizeError : public Error {
public:
    using Error::Error;
};

class PositivityError : public Error {
public:
    using Error::Error;
};

/// Fixed-point inversion of Id + tau*phi did not converge.
class InversionError : public Error {
public:
    using Error::Error;
};

/// |tau| exceeds the range on which Id + tau*phi is a diffeomorphism.
class CurveDomainError : public Error {
public:
    using Error::Error;
};

/// Normalization constant of a stationary state could not be bracketed.
class NoConfinementError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class UnsupportedModelError : public Error {
public:
    using Error::Error;
};

/// Configuration / preset syntax error with a line-addressable location.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column)
        : Error(format(what, line, column)), line_(line), column_(column) {}

    [[nodiscard]] int line() const noexcept { return line_; }
    [[nodiscard]] int column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, int line, int column) {
        if (line <= 0) return what;
        return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what;
    }
    int line_;
    int column_;
};

}  // namespace pflow
