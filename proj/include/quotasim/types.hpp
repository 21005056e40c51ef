#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace quotasim {

// Domain aliases. Everything monetary is a plain double; quantities are
// fractional bond counts (unit face value 1).
using Money = double;
using Price = double;   // per unit face
using Rate = double;    // annual effective, as a decimal fraction
using Quantity = double;
using Year = int;       // calendar year of a December observation

/// Error raised when ingesting malformed input files.
class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& what, std::size_t line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Error raised when a curve set does not cover a required observation year.
class coverage_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Error raised for queries outside a curve's knot range.
class extrapolation_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Error raised for invalid scenario or grid configuration.
class config_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Error raised when a quota update hits a degenerate denominator.
class degeneracy_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Round-half-up on a non-negative count. Fixed rule so entrant/exit
/// counts are deterministic across platforms.
inline long long round_half_up(double x) {
    return static_cast<long long>(std::floor(x + 0.5));
}

inline bool nearly_equal(double a, double b, double tol = 1e-12) {
    return std::fabs(a - b) <= tol;
}

}  // namespace quotasim
