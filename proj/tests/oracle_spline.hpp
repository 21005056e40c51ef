#pragma once

// Test-only natural-cubic-spline oracle, deliberately built the heavy
// textbook way: one dense 4(n-1) x 4(n-1) linear system over global
// polynomial coefficients, solved by Gaussian elimination with partial
// pivoting. Shares no code with the library's tridiagonal implementation.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracle {

class DenseNaturalSpline {
public:
    DenseNaturalSpline(std::vector<double> xs, std::vector<double> ys)
        : xs_(std::move(xs)), ys_(std::move(ys)) {
        const std::size_t n = xs_.size();
        if (n < 3 || n != ys_.size()) throw std::invalid_argument("oracle spline: bad input");
        // Work in unit coordinates; raw monomials of day-scale abscissae
        // make the dense system hopelessly ill-conditioned.
        shift_ = xs_.front();
        scale_ = xs_.back() - xs_.front();
        for (auto& x : xs_) x = (x - shift_) / scale_;
        const std::size_t m = 4 * (n - 1);
        std::vector<std::vector<double>> a(m, std::vector<double>(m + 1, 0.0));
        std::size_t row = 0;
        auto coef = [&](std::size_t r, std::size_t seg, int power) -> double& {
            return a[r][4 * seg + static_cast<std::size_t>(power)];
        };
        // Interpolation at both ends of every segment.
        for (std::size_t s = 0; s + 1 < n; ++s) {
            for (int end = 0; end < 2; ++end, ++row) {
                const double x = xs_[s + static_cast<std::size_t>(end)];
                coef(row, s, 0) = 1.0;
                coef(row, s, 1) = x;
                coef(row, s, 2) = x * x;
                coef(row, s, 3) = x * x * x;
                a[row][m] = ys_[s + static_cast<std::size_t>(end)];
            }
        }
        // First- and second-derivative continuity at interior knots.
        for (std::size_t s = 0; s + 2 < n; ++s) {
            const double x = xs_[s + 1];
            coef(row, s, 1) = 1.0;
            coef(row, s, 2) = 2.0 * x;
            coef(row, s, 3) = 3.0 * x * x;
            coef(row, s + 1, 1) = -1.0;
            coef(row, s + 1, 2) = -2.0 * x;
            coef(row, s + 1, 3) = -3.0 * x * x;
            ++row;
            coef(row, s, 2) = 2.0;
            coef(row, s, 3) = 6.0 * x;
            coef(row, s + 1, 2) = -2.0;
            coef(row, s + 1, 3) = -6.0 * x;
            ++row;
        }
        // Natural boundary: zero second derivative at both ends.
        coef(row, 0, 2) = 2.0;
        coef(row, 0, 3) = 6.0 * xs_.front();
        ++row;
        coef(row, n - 2, 2) = 2.0;
        coef(row, n - 2, 3) = 6.0 * xs_.back();
        ++row;
        if (row != m) throw std::logic_error("oracle spline: system assembly mismatch");

        // Gaussian elimination with partial pivoting.
        for (std::size_t col = 0; col < m; ++col) {
            std::size_t pivot = col;
            for (std::size_t r = col + 1; r < m; ++r)
                if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
            std::swap(a[col], a[pivot]);
            if (a[col][col] == 0.0) throw std::runtime_error("oracle spline: singular system");
            for (std::size_t r = 0; r < m; ++r) {
                if (r == col) continue;
                const double f = a[r][col] / a[col][col];
                if (f == 0.0) continue;
                for (std::size_t c = col; c <= m; ++c) a[r][c] -= f * a[col][c];
            }
        }
        coeffs_.resize(m);
        for (std::size_t i = 0; i < m; ++i) coeffs_[i] = a[i][m] / a[i][i];
    }

    double operator()(double x) const {
        x = (x - shift_) / scale_;
        std::size_t s = 0;
        while (s + 2 < xs_.size() && x > xs_[s + 1]) ++s;
        const double* c = &coeffs_[4 * s];
        return c[0] + x * (c[1] + x * (c[2] + x * c[3]));
    }

private:
    std::vector<double> xs_, ys_;
    std::vector<double> coeffs_;
    double shift_ = 0.0;
    double scale_ = 1.0;
};

}  // namespace oracle
