#pragma once

#include <cstdint>
#include <optional>

#include "diam/linalg.hpp"
#include "diam/moments.hpp"
#include "diam/rng.hpp"
#include "diam/target.hpp"

namespace diam {

enum class KernelKind { RW, PCN, AM, DIAM };
enum class RefMode { Zero, Fixed, AdaptiveMean };

const char* kernel_kind_name(KernelKind kind);
KernelKind kernel_kind_from_name(const std::string& name);

struct KernelConfig {
    KernelKind kind = KernelKind::DIAM;
    std::size_t dim = 0;
    double beta_init = 0.0;
    double inflation = 1.0;  // DIAM noise inflation for non-Gaussian targets
    RefMode ref_mode = RefMode::Zero;
    Vector fixed_ref;
    std::size_t n_lag = 0;
    double band_lo = 0.0;  // acceptance band; step size adapts outside it
    double band_hi = 0.0;
    std::uint64_t n0 = 0;          // burn-in iterations before accumulation/adaptation
    std::uint64_t n_ref_start = 0;  // earliest iteration for an adaptive reference point
    double beta_adapt_factor = 1.1;
    double beta_min = 1e-6;
    double beta_max = 1.0;
    bool adapt_beta = true;
    bool use_explicit_inverse = false;
    // Covariance whose Cholesky factor seeds A: the pCN reference factor, or
    // an initial/fixed factor for AM/DIAM. Identity when absent.
    std::optional<Matrix> proposal_cov;
    // NotPositiveDefinite recovery: add eps·trace(C)/d·I, escalating eps
    double jitter_eps0 = 1e-10;
    double jitter_growth = 100.0;
    double jitter_eps_max = 1e-4;

    bool pcn_form() const { return kind == KernelKind::PCN || kind == KernelKind::DIAM; }
    bool adapts_covariance() const { return kind == KernelKind::AM || kind == KernelKind::DIAM; }
    double noise_inflation() const { return kind == KernelKind::DIAM ? inflation : 1.0; }

    /// Paper defaults: beta = min(2.4/sqrt(d), 0.5), n_lag = d/2, bands
    /// (0.1, 0.3) for RW/AM and (0.3, 0.5) for pCN/DIAM, n0 = 5d.
    static KernelConfig defaults(KernelKind kind, std::size_t dim);
};

/// Everything one chain owns. The noise batch holds the next n_lag pre-scaled
/// increments xi = beta·inflation·A·W, regenerated at every lag boundary.
struct ChainState {
    Vector x;
    double log_pi = 0.0;
    double quad = 0.0;  // cached ½·inflation⁻²·|A⁻¹(x − x_ref)|²
    double beta = 0.0;
    std::uint64_t n = 0;
    std::uint64_t n_accepted = 0;
    LowerTriangular factor;  // A
    std::optional<LowerTriangular> factor_inv;
    Vector x_ref;
    Matrix noise;  // n_lag rows of dim
    std::size_t noise_pos = 0;
    std::uint64_t noise_ctr_at_batch = 0;  // noise stream position before the batch draw
    MomentAccumulator batch_acc;  // samples since the last merge
    MomentAccumulator cum_acc;    // samples since burn-in, for the PSRF
};

ChainState init_chain(const KernelConfig& cfg, const Target& target, std::span<const double> x0,
                      RngStream& noise_rng);

/// Candidate from the current state and a pre-scaled increment. Pure.
Vector propose(const KernelConfig& cfg, const ChainState& state, std::span<const double> noise);

/// log alpha for a candidate: plain density ratio for the symmetric kernels,
/// density ratio corrected by the weighted quadratic for the pCN-form ones.
double log_accept_ratio(const KernelConfig& cfg, const Target& target, const ChainState& state,
                        std::span<const double> candidate);

/// One Metropolis-Hastings transition; consumes one noise increment and one
/// uniform. Post-burn-in samples are fed to the chain's accumulators.
bool mh_step(const KernelConfig& cfg, const Target& target, ChainState& state,
             RngStream& uniform_rng);

/// Lag-boundary maintenance: step-size adaptation against the acceptance
/// band, covariance refactorization from the blended moments, optional
/// reference-point move, quadratic cache refresh and the batched noise draw.
/// Returns the window acceptance rate.
double lag_update(const KernelConfig& cfg, ChainState& state, const GlobalMoments& snapshot,
                  RngStream& noise_rng);

/// Cholesky with the escalating-jitter fallback.
LowerTriangular jittered_cholesky(const Matrix& cov, const KernelConfig& cfg);

/// Explicit inverse of a lower-triangular factor (itself lower triangular).
LowerTriangular invert_lower(const LowerTriangular& l);

void regenerate_noise(const KernelConfig& cfg, ChainState& state, RngStream& noise_rng);

}  // namespace diam
