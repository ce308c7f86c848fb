#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "diam/linalg.hpp"

namespace diam {

/// Streaming raw first/second moments of one chain. Raw (uncentered) form is
/// kept because the multi-chain merge algebra is stated in raw moments;
/// centering happens only when a covariance is requested.
struct MomentAccumulator {
    MomentAccumulator() = default;
    explicit MomentAccumulator(std::size_t d) : dim(d), mean(d, 0.0), second(d, d) {}

    /// Running-average update: old·n/(n+1) + new/(n+1).
    void accumulate(std::span<const double> x);

    void reset();

    std::size_t dim = 0;
    std::uint64_t count = 0;
    Vector mean;
    Matrix second;  // (1/n)·Σ x xᵀ, exactly symmetric by construction
};

/// Shared moments across chains, merged once per batch.
struct GlobalMoments {
    GlobalMoments() = default;
    explicit GlobalMoments(std::size_t d) : dim(d), mean(d, 0.0), second(d, d) {}

    std::size_t dim = 0;
    std::uint64_t batches = 0;  // k
    std::uint64_t count = 0;    // total samples merged so far
    Vector mean;
    Matrix second;
};

struct BlendedMoments {
    std::uint64_t count = 0;
    Vector mean;
    Matrix second;
    Matrix cov;  // second − mean·meanᵀ
};

/// Convex combination of a chain's not-yet-merged local moments with the last
/// global snapshot, weighted by sample counts. With full lag intervals the
/// weights reduce to kMP/(kMP+m) and m/(kMP+m).
BlendedMoments blend_local_global(const MomentAccumulator& local, const GlobalMoments& global);

/// Fold one batch of per-chain accumulators into the global moments, in the
/// order given (callers pass ascending chain index). The result equals the
/// moments of the concatenation of every sample ever merged.
/// Throws UnequalBatchSizes when the locals disagree on sample count.
void merge_batch(GlobalMoments& global, std::span<const MomentAccumulator> locals);

/// Count-weighted fold of one accumulator into another; equals accumulating
/// the samples one by one up to rounding.
void merge_into(MomentAccumulator& into, const MomentAccumulator& from);

/// S − m·mᵀ, symmetrized.
Matrix covariance(const Matrix& second, std::span<const double> mean);
Matrix covariance(const MomentAccumulator& acc);
Matrix covariance(const GlobalMoments& g);

}  // namespace diam
