#include "diam/rng.hpp"

#include <cmath>

namespace diam {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

inline void mul_hilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index,
                     std::string_view purpose) {
    std::uint64_t s = master_seed;
    const std::uint64_t k = splitmix64(s);
    key_[0] = static_cast<std::uint32_t>(k);
    key_[1] = static_cast<std::uint32_t>(k >> 32);

    std::uint64_t id = splitmix64(s) ^ (stream_index * 0xA24BAED4963EE407ull) ^ fnv1a64(purpose);
    const std::uint64_t sid = splitmix64(id);
    stream_[0] = static_cast<std::uint32_t>(sid);
    stream_[1] = static_cast<std::uint32_t>(sid >> 32);
}

std::array<std::uint32_t, 4> RngStream::block() {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(counter_),
        static_cast<std::uint32_t>(counter_ >> 32),
        stream_[0],
        stream_[1],
    };
    ++counter_;

    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mul_hilo(kPhiloxM0, ctr[0], hi0, lo0);
        mul_hilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

std::uint64_t RngStream::next_u64() {
    const auto b = block();
    return (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
    const auto b = block();
    const std::uint64_t w0 = (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
    const std::uint64_t w1 = (static_cast<std::uint64_t>(b[3]) << 32) | b[2];
    // u1 in (0,1] so the log is finite
    const double u1 = (static_cast<double>(w0 >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(w1 >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
}

RngStream make_rng_stream(std::uint64_t master_seed, std::uint64_t chain_index,
                          std::string_view purpose) {
    return RngStream(master_seed, chain_index, purpose);
}

}  // namespace diam
