#pragma once

#include <stdexcept>
#include <string>

namespace mcmc {

/// Raised when an adaptive routine exhausts its work budget before meeting
/// the requested tolerance.
class non_convergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by root finders when the supplied interval does not bracket a root.
class bracket_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or out-of-range configuration input.
class config_error : public std::runtime_error {
public:
    config_error(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

/// A design problem with no admissible solution.
class infeasible_design : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mcmc
