#pragma once

#include <span>

namespace diam {

/// Ordinary least squares of y against (1, x, x²).
struct QuadraticFit {
    double coeffs[3] = {0.0, 0.0, 0.0};  // a + b·x + c·x²
    double rss = 0.0;                    // residual sum of squares
    /// Variance of the fitted quadratic component c·x² across the sweep,
    /// relative to the variance of y; near 1 when the x² term dominates.
    double quad_share = 0.0;
};

QuadraticFit fit_quadratic(std::span<const double> xs, std::span<const double> ys);

}  // namespace diam
