#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "diam/linalg.hpp"
#include "diam/moments.hpp"

namespace diam {

/// Default stopping tolerances: relative Frobenius error of the sample
/// covariance, and absolute Euclidean error of the sample mean.
inline constexpr double kDefaultCovTol = 0.001;
inline constexpr double kDefaultMeanTol = 0.01;

/// Sample autocorrelations rho_0..rho_max_lag of a scalar trace, with biased
/// (divide-by-N) autocovariances so the estimate stays positive semidefinite.
/// Throws DegenerateTrace when the trace has zero variance.
Vector acf(std::span<const double> trace, std::size_t max_lag);

/// Integrated autocorrelation time 1 + 2·Σ rho_n, summing until the first
/// lag with rho_n < 0.05 or the lag cap.
double iact(std::span<const double> trace);
double iact(std::span<const double> trace, std::size_t max_lag);

/// Effective sample size N / IACT.
double ess(std::span<const double> trace);

/// Per-chain within moments for the scale-reduction diagnostic.
struct PsrfInput {
    std::uint64_t samples_per_chain = 0;
    std::vector<Vector> chain_means;        // one per chain
    std::vector<Vector> chain_second_diag;  // diagonal of the raw second moment
    Vector global_mean;
};

PsrfInput make_psrf_input(std::span<const MomentAccumulator> chains);

/// sqrt(R_i) per direction: R_i = (n−1)/n + ((P+1)/(P·n))·B_i/W_i with
/// between-chain B_i and within-chain W_i variances.
/// Throws ZeroWithinVariance when some W_i is zero.
Vector psrf(const PsrfInput& input);

/// ‖C_emp − C_true‖_F / ‖C_true‖_F.
double cov_error(const Matrix& emp, const Matrix& truth);

/// ‖m_emp − m_true‖₂.
double mean_error(std::span<const double> emp, std::span<const double> truth);

}  // namespace diam
