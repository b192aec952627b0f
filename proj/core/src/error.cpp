#include "qlert/error.hpp"

#include <utility>

namespace qlert {

ParseError::ParseError(const std::string& what, std::size_t line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

NonConvergence::NonConvergence(const std::string& what, std::vector<double> history)
    : std::runtime_error(what), history_(std::move(history)) {}

NumericalBreakdown::NumericalBreakdown(const std::string& what, long element)
    : std::runtime_error(what), element_(element) {}

}  // namespace qlert
