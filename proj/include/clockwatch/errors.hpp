#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clockwatch {

/// Malformed input file (bad row, missing column, unparsable number).
class ParseError : public std::runtime_error {
public:
    ParseError(std::string msg, std::size_t line = 0)
        : std::runtime_error(line ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Well-formed file whose content violates a data invariant (e.g. epochs not monotonic).
class InvalidDataError : public std::runtime_error {
public:
    InvalidDataError(std::string msg, std::size_t line = 0)
        : std::runtime_error(line ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Numerical failure inside a linear-algebra step; carries a condition estimate.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(std::string msg, double condition_estimate = 0.0)
        : std::runtime_error(std::move(msg)), condition_(condition_estimate) {}
    double condition_estimate() const { return condition_; }

private:
    double condition_;
};

}  // namespace clockwatch
