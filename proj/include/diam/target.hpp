#pragma once

#include <cstdint>
#include <string>

#include "diam/linalg.hpp"

namespace diam {

enum class TargetKind { Pi1, Pi2, Pi3, Pi4, Pi5, Pi6 };

const char* target_kind_name(TargetKind kind);
TargetKind target_kind_from_name(const std::string& name);

/// One of the six synthetic test densities. Gaussian kinds carry a dense
/// precision for the log-density; the twisted kinds evaluate through the
/// eigenbasis of their Gaussian base. Immutable after construction, safe to
/// share across chains.
struct Target {
    TargetKind kind = TargetKind::Pi1;
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    double sigma2 = 0.0;   // Pi4 data-variance knob
    double twist_b = 0.0;  // Pi5/Pi6 twist magnitude

    Matrix precision;   // Gaussian kinds only
    Matrix covariance;  // analytic covariance, all kinds
    Matrix eigvecs;     // V, eigenvector columns of the base covariance, ascending
    Matrix eigvecs_t;   // Vᵀ cached row-major
    Vector eigvals;     // base variances σᵢ², ascending
    Vector b_coeffs;    // twist coefficients, zero outside the twisted pairs

    Vector mean;        // analytic mean
    Vector eigen_mean;  // per-direction mean in eigen coordinates
    Vector eigen_var;   // per-direction variance in eigen coordinates

    bool twisted() const { return kind == TargetKind::Pi5 || kind == TargetKind::Pi6; }

    /// Unnormalized log density; maximized at the origin for every kind.
    double log_density(std::span<const double> x) const;

    double condition_number() const { return eigvals.back() / eigvals.front(); }
};

/// Build one of the six densities from a seed. sigma2 <= 0 picks the default
/// 1/d for Pi4; twist_b < 0 picks 0.3 for Pi5 and 2 for Pi6.
Target build_target(TargetKind kind, std::size_t dim, std::uint64_t seed, double sigma2 = 0.0,
                    double twist_b = -1.0);

/// y_{i+1} = z_{i+1} + b_i z_i² on the twisted pairs; identity elsewhere.
Vector twist_map(std::span<const double> b_coeffs, std::span<const double> z);
/// Inverse of twist_map (triangular, so direct).
Vector untwist_map(std::span<const double> b_coeffs, std::span<const double> w);

struct AnalyticMoments {
    Vector mean;
    Matrix cov;
    Vector eigen_mean;
    Vector eigen_var;
};
AnalyticMoments analytic_moments(const Target& t);

void target_save(const Target& t, const std::string& path);
Target target_load(const std::string& path);

}  // namespace diam
