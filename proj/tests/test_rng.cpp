#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "diam/rng.hpp"
#include "doctest.h"

using diam::make_rng_stream;
using diam::RngStream;

TEST_CASE("identical (seed, index, tag) gives identical streams") {
    RngStream a = make_rng_stream(7, 3, "noise");
    RngStream b = make_rng_stream(7, 3, "noise");
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct chain or purpose gives distinct streams") {
    RngStream base = make_rng_stream(7, 3, "noise");
    RngStream other_chain = make_rng_stream(7, 4, "noise");
    RngStream other_tag = make_rng_stream(7, 3, "uniform");
    int same_chain = 0, same_tag = 0;
    for (int i = 0; i < 64; ++i) {
        const std::uint64_t v = base.next_u64();
        if (v == other_chain.next_u64()) ++same_chain;
        if (v == other_tag.next_u64()) ++same_tag;
    }
    CHECK(same_chain == 0);
    CHECK(same_tag == 0);
}

TEST_CASE("golden values, stream (42, 0, noise)") {
    // frozen at first implementation; the raw counter output is
    // platform-independent and these doubles are exact images of it
    RngStream s = make_rng_stream(42, 0, "noise");
    CHECK(s.uniform() == 0.54754173406347939);
    CHECK(s.uniform() == 0.9859462058561157);
    CHECK(s.uniform() == 0.31794153781910683);
    CHECK(s.uniform() == 0.86549658717415934);

    RngStream raw = make_rng_stream(42, 0, "noise");
    CHECK(raw.next_u64() == 10100362237944140226ull);
    CHECK(raw.next_u64() == 18187497329872721372ull);
    CHECK(raw.next_u64() == 5864986178550710854ull);
    CHECK(raw.next_u64() == 15965594040270767174ull);
}

TEST_CASE("draw counter restores the stream position") {
    RngStream s = make_rng_stream(9, 1, "noise");
    for (int i = 0; i < 17; ++i) s.normal();
    const std::uint64_t mark = s.draw_count();
    std::vector<double> expect;
    for (int i = 0; i < 5; ++i) expect.push_back(s.normal());
    s.set_draw_count(mark);
    for (int i = 0; i < 5; ++i) CHECK(s.normal() == expect[static_cast<std::size_t>(i)]);
}

TEST_CASE("uniform chi-square over 100 bins") {
    RngStream s = make_rng_stream(2024, 0, "uniformity");
    constexpr int kBins = 100;
    constexpr int kDraws = 1000000;
    int counts[kBins] = {};
    bool in_range = true;
    for (int i = 0; i < kDraws; ++i) {
        const double u = s.uniform();
        if (u < 0.0 || u >= 1.0) in_range = false;
        ++counts[static_cast<int>(u * kBins)];
    }
    CHECK(in_range);
    const double expected = static_cast<double>(kDraws) / kBins;
    double stat = 0.0;
    for (int c : counts) {
        const double diff = c - expected;
        stat += diff * diff / expected;
    }
    // chi2(99) quantile at 1 - 0.001
    CHECK(stat < 148.2304);
}

TEST_CASE("normal moments") {
    RngStream s = make_rng_stream(5, 0, "normals");
    constexpr int n = 200000;
    double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        sum += z;
        sum2 += z * z;
        sum4 += z * z * z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(sum4 / n == doctest::Approx(3.0).epsilon(0.05));
}
