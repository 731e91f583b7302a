#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvem {

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A state that violates a documented invariant (e.g. non-positive variance).
class InvalidState : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when an objective or update produces a non-finite value. Carries the
// last feasible point the optimizer visited, when there is one.
class NumericalFailure : public std::runtime_error {
public:
    explicit NumericalFailure(const std::string& what, std::vector<double> last_point = {})
        : std::runtime_error(what), last_point_(std::move(last_point)) {}

    const std::vector<double>& last_point() const noexcept { return last_point_; }

private:
    std::vector<double> last_point_;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace cvem
