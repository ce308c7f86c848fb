#include "diam/fit.hpp"

#include "diam/linalg.hpp"

namespace diam {

QuadraticFit fit_quadratic(std::span<const double> xs, std::span<const double> ys) {
    require(xs.size() == ys.size(), ErrorCode::DimensionMismatch, "fit_quadratic: size mismatch");
    const std::size_t n = xs.size();
    require(n >= 3, ErrorCode::InvalidArgument, "fit_quadratic: need at least 3 points");

    // normal equations for the (1, x, x²) design
    Matrix xtx(3, 3);
    Vector xty(3, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = xs[i];
        const double row[3] = {1.0, x, x * x};
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b <= a; ++b) {
                xtx(a, b) += row[a] * row[b];
                if (a != b) xtx(b, a) = xtx(a, b);
            }
            xty[a] += row[a] * ys[i];
        }
    }
    const LowerTriangular l = cholesky(xtx);
    const Vector beta = tri_solve_transposed(l, tri_solve(l, xty));

    QuadraticFit fit;
    for (int a = 0; a < 3; ++a) fit.coeffs[a] = beta[a];

    double y_mean = 0.0, q_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        y_mean += ys[i];
        q_mean += beta[2] * xs[i] * xs[i];
    }
    y_mean /= static_cast<double>(n);
    q_mean /= static_cast<double>(n);
    double y_var = 0.0, q_var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pred = beta[0] + beta[1] * xs[i] + beta[2] * xs[i] * xs[i];
        const double resid = ys[i] - pred;
        fit.rss += resid * resid;
        y_var += (ys[i] - y_mean) * (ys[i] - y_mean);
        const double q = beta[2] * xs[i] * xs[i];
        q_var += (q - q_mean) * (q - q_mean);
    }
    fit.quad_share = y_var > 0.0 ? q_var / y_var : 0.0;
    return fit;
}

}  // namespace diam
