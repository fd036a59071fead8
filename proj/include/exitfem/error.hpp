#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace exitfem {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression source; `position()` is a 0-based character offset.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t position)
        : Error(message + " at position " + std::to_string(position)), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Arithmetic failure while evaluating an expression (division by zero).
class EvaluationError : public Error {
public:
    EvaluationError(const std::string& message, std::vector<double> point);
    const std::vector<double>& point() const noexcept { return point_; }

private:
    std::vector<double> point_;
};

/// Invalid model, domain, mesh or run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Linear solver breakdown / non-convergence, or a failed factorization.
class SolverError : public Error {
public:
    using Error::Error;
};

std::string format_point(const std::vector<double>& point);

}  // namespace exitfem
