#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "quotasim/types.hpp"

namespace quotasim {

/// Natural cubic spline over strictly increasing knots.
///
/// The interpolant passes through every knot, is C2 between knots, and has
/// zero second derivative at both ends. Second derivatives at the knots
/// are obtained from the standard tridiagonal system (Thomas algorithm):
///
///   h_{i-1} M_{i-1} + 2 (h_{i-1} + h_i) M_i + h_i M_{i+1}
///       = 6 [ (y_{i+1} - y_i)/h_i - (y_i - y_{i-1})/h_{i-1} ],
///   M_0 = M_{n-1} = 0,  h_i = x_{i+1} - x_i.
///
/// Immutable after construction; concurrent evaluation is safe.
class NaturalCubicSpline {
public:
    NaturalCubicSpline(std::vector<double> xs, std::vector<double> ys)
        : xs_(std::move(xs)), ys_(std::move(ys)) {
        const std::size_t n = xs_.size();
        if (n != ys_.size())
            throw std::invalid_argument("spline: x/y size mismatch");
        if (n < 4)
            throw std::invalid_argument("spline: need at least 4 knots");
        for (std::size_t i = 1; i < n; ++i)
            if (!(xs_[i] > xs_[i - 1]))
                throw std::invalid_argument("spline: knots must be strictly increasing");

        m_.assign(n, 0.0);

        // Forward sweep on the interior (n-2) x (n-2) tridiagonal system.
        std::vector<double> diag(n, 0.0), rhs(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = xs_[i] - xs_[i - 1];
            const double h1 = xs_[i + 1] - xs_[i];
            diag[i] = 2.0 * (h0 + h1);
            rhs[i] = 6.0 * ((ys_[i + 1] - ys_[i]) / h1 - (ys_[i] - ys_[i - 1]) / h0);
        }
        std::vector<double> cprime(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = xs_[i] - xs_[i - 1];
            const double h1 = xs_[i + 1] - xs_[i];
            const double lower = (i == 1) ? 0.0 : h0;
            const double denom = diag[i] - lower * cprime[i - 1];
            cprime[i] = (i + 2 < n) ? h1 / denom : 0.0;
            const double prev = (i == 1) ? 0.0 : rhs[i - 1];
            rhs[i] = (rhs[i] - lower * prev) / denom;
        }
        for (std::size_t i = n - 2; i >= 1; --i) {
            m_[i] = rhs[i] - cprime[i] * m_[i + 1];
            if (i == 1) break;
        }
    }

    double x_min() const { return xs_.front(); }
    double x_max() const { return xs_.back(); }

    /// Evaluates the interpolant. x must lie within [x_min, x_max].
    double operator()(double x) const {
        if (x < xs_.front() || x > xs_.back())
            throw extrapolation_error("spline query outside knot range");
        // Knots reproduce their ordinates exactly.
        const auto it = std::lower_bound(xs_.begin(), xs_.end(), x);
        if (it != xs_.end() && *it == x)
            return ys_[static_cast<std::size_t>(it - xs_.begin())];

        const std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
        const double h = xs_[i + 1] - xs_[i];
        const double a = (xs_[i + 1] - x) / h;
        const double b = (x - xs_[i]) / h;
        return a * ys_[i] + b * ys_[i + 1] +
               ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * (h * h) / 6.0;
    }

private:
    std::vector<double> xs_, ys_;
    std::vector<double> m_;  // second derivatives at knots
};

}  // namespace quotasim
