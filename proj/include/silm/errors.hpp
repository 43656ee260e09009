#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace silm {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ConstantColumnError : public Error {
public:
    explicit ConstantColumnError(std::size_t column)
        : Error("column " + std::to_string(column) + " is constant (sd = 0)"), column_(column) {}
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

class LabelCodingError : public Error {
public:
    using Error::Error;
};

class SingularMatrixError : public Error {
public:
    SingularMatrixError(const std::string& what, double attempted_jitter)
        : Error(what), jitter_(attempted_jitter) {}
    double attempted_jitter() const noexcept { return jitter_; }

private:
    double jitter_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t column)
        : Error(what), row_(row), column_(column) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

// Raised by run_chain when any update fails; carries the zero-based sweep.
class ChainError : public Error {
public:
    ChainError(const std::string& what, long sweep) : Error(what), sweep_(sweep) {}
    long sweep() const noexcept { return sweep_; }

private:
    long sweep_;
};

}  // namespace silm
