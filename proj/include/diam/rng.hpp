#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace diam {

/// Counter-based stream built on Philox4x32-10 (Salmon et al., SC'11).
/// Every draw consumes exactly one 128-bit block, so the whole stream state
/// is the (key, stream, counter) triple and a run can be checkpointed by
/// recording a single 64-bit draw counter.
class RngStream {
public:
    RngStream() = default;
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index, std::string_view purpose);

    /// Next raw 64 bits (low half of the next block).
    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

    /// Uniform double in (0, 1); safe under log().
    double uniform_open();

    /// Standard normal via the Box-Muller cosine branch.
    double normal();

    std::uint64_t draw_count() const { return counter_; }
    void set_draw_count(std::uint64_t c) { counter_ = c; }

private:
    std::array<std::uint32_t, 4> block();

    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 2> stream_{};
    std::uint64_t counter_ = 0;
};

/// Streams for distinct (chain_index, purpose) pairs are statistically
/// independent and reproducible across platforms.
RngStream make_rng_stream(std::uint64_t master_seed, std::uint64_t chain_index,
                          std::string_view purpose);

}  // namespace diam
