#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qlert {

// Bad argument or violated precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Geometry that cannot be meshed (overlapping petals, petals touching the boundary, ...).
class InvalidGeometry : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed mesh or config file. Carries the 1-based line number when known (0 otherwise).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// File could not be opened, read, or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A perfectly conducting region touches the Dirichlet boundary.
class ConflictError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Free degrees of freedom that are not coupled to any prescribed value.
class SingularSystem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Iterative solver (CG or Picard) exhausted its iteration budget.
class NonConvergence : public std::runtime_error {
public:
    NonConvergence(const std::string& what, std::vector<double> history);
    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

// NaN/Inf appeared during a solve; `element` is the first offending element (-1 if unknown).
class NumericalBreakdown : public std::runtime_error {
public:
    NumericalBreakdown(const std::string& what, long element);
    long element() const noexcept { return element_; }

private:
    long element_;
};

}  // namespace qlert
