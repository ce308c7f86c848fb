#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "diam/linalg.hpp"
#include "diam/moments.hpp"
#include "diam/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace diam;

namespace {

Vector draw_vec(std::size_t d, RngStream& rng, double scale = 1.0) {
    Vector v(d);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

}  // namespace

TEST_CASE("accumulate examples") {
    MomentAccumulator acc(2);
    acc.accumulate(Vector{1, 0});
    CHECK(acc.mean == Vector{1, 0});
    CHECK(acc.second(0, 0) == 1.0);
    CHECK(acc.second(0, 1) == 0.0);
    CHECK(covariance(acc).a == Matrix(2, 2).a);  // single sample: zero covariance

    acc.accumulate(Vector{-1, 0});
    CHECK(acc.mean == Vector{0, 0});
    CHECK(acc.second(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(acc.second(1, 1) == 0.0);
    const Matrix cov = covariance(acc);
    CHECK(cov(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cov(1, 1) == 0.0);

    CHECK(throws_code(ErrorCode::DimensionMismatch, [&] { acc.accumulate(Vector{1, 2, 3}); }));
}

TEST_CASE("running recursion matches the batch formula") {
    RngStream rng = make_rng_stream(3, 0, "moments");
    const std::size_t d = 4;
    MomentAccumulator acc(d);
    std::vector<Vector> samples;
    for (int i = 0; i < 1000; ++i) {
        samples.push_back(draw_vec(d, rng));
        acc.accumulate(samples.back());
    }
    const oracle::BatchMoments ref = oracle::batch_moments(samples);
    CHECK(oracle::rel_frobenius(acc.second, ref.second) < 1e-12);
    for (std::size_t i = 0; i < d; ++i)
        CHECK(acc.mean[i] == doctest::Approx(ref.mean[i]).epsilon(1e-12));
}

TEST_CASE("cancellation guard: 1e4 updates with magnitude 1e3 entries") {
    RngStream rng = make_rng_stream(4, 0, "moments");
    const std::size_t d = 3;
    MomentAccumulator acc(d);
    std::vector<Vector> samples;
    for (int i = 0; i < 10000; ++i) {
        samples.push_back(draw_vec(d, rng, 1e3));
        acc.accumulate(samples.back());
    }
    const oracle::BatchMoments ref = oracle::batch_moments(samples);
    CHECK(oracle::rel_frobenius(acc.second, ref.second) < 1e-12);
}

TEST_CASE("blend_local_global") {
    const std::size_t d = 2;

    SUBCASE("zero global weight returns the local moments") {
        MomentAccumulator local(d);
        local.accumulate(Vector{1, 2});
        local.accumulate(Vector{0, 1});
        const BlendedMoments b = blend_local_global(local, GlobalMoments(d));
        CHECK(b.count == 2);
        CHECK(b.mean == local.mean);
        CHECK(b.second.a == local.second.a);
        CHECK(b.cov.a == covariance(local).a);
    }

    SUBCASE("equal local and global moments are a fixed point") {
        MomentAccumulator local(d);
        local.accumulate(Vector{1, -1});
        local.accumulate(Vector{3, 5});
        GlobalMoments g(d);
        g.count = 2;
        g.batches = 1;
        g.mean = local.mean;
        g.second = local.second;
        const BlendedMoments b = blend_local_global(local, g);
        for (std::size_t i = 0; i < d; ++i)
            CHECK(b.mean[i] == doctest::Approx(local.mean[i]).epsilon(1e-15));
        CHECK(oracle::max_abs_diff(b.second, local.second) < 1e-15);
    }

    SUBCASE("half-half weights match direct concatenation") {
        // k=1, M=P=1, m=1: one merged interval and one local interval
        MomentAccumulator first(d), second_acc(d);
        first.accumulate(Vector{1, 0});
        second_acc.accumulate(Vector{0, 1});
        GlobalMoments g(d);
        merge_batch(g, std::vector<MomentAccumulator>{first});
        const BlendedMoments b = blend_local_global(second_acc, g);
        const oracle::BatchMoments ref = oracle::batch_moments({Vector{1, 0}, Vector{0, 1}});
        for (std::size_t i = 0; i < d; ++i)
            CHECK(b.mean[i] == doctest::Approx(ref.mean[i]).epsilon(1e-15));
        CHECK(oracle::max_abs_diff(b.second, ref.second) < 1e-15);
    }
}

TEST_CASE("merge_batch examples") {
    const std::size_t d = 2;

    SUBCASE("P=1 equals the chain's own moments") {
        RngStream rng = make_rng_stream(5, 0, "moments");
        MomentAccumulator acc(d);
        for (int i = 0; i < 7; ++i) acc.accumulate(draw_vec(d, rng));
        GlobalMoments g(d);
        merge_batch(g, std::vector<MomentAccumulator>{acc});
        CHECK(g.count == 7);
        CHECK(g.batches == 1);
        for (std::size_t i = 0; i < d; ++i)
            CHECK(g.mean[i] == doctest::Approx(acc.mean[i]).epsilon(1e-15));
        CHECK(oracle::max_abs_diff(g.second, acc.second) < 1e-15);
    }

    SUBCASE("two chains with hand-listed samples") {
        MomentAccumulator a(d), b(d);
        a.accumulate(Vector{1, 0});
        b.accumulate(Vector{0, 1});
        GlobalMoments g(d);
        merge_batch(g, std::vector<MomentAccumulator>{a, b});
        CHECK(g.mean[0] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(g.mean[1] == doctest::Approx(0.5).epsilon(1e-15));
    }

    SUBCASE("unequal counts are rejected") {
        MomentAccumulator a(d), b(d);
        a.accumulate(Vector{1, 0});
        a.accumulate(Vector{1, 1});
        b.accumulate(Vector{0, 1});
        GlobalMoments g(d);
        CHECK(throws_code(ErrorCode::UnequalBatchSizes, [&] {
            merge_batch(g, std::vector<MomentAccumulator>{a, b});
        }));
    }
}

TEST_CASE("merge equals concatenation across (P, K, M, n_lag) grid") {
    RngStream rng = make_rng_stream(6, 0, "moments");
    const std::size_t d = 3;
    for (std::size_t p_count : {1u, 2u, 3u, 4u}) {
        for (std::size_t k_count : {1u, 2u, 3u}) {
            for (std::size_t m_count : {1u, 2u}) {
                for (std::size_t n_lag : {2u, 5u}) {
                    GlobalMoments g(d);
                    std::vector<Vector> everything;
                    for (std::size_t k = 0; k < k_count; ++k) {
                        std::vector<MomentAccumulator> locals(p_count, MomentAccumulator(d));
                        for (std::size_t p = 0; p < p_count; ++p)
                            for (std::size_t i = 0; i < m_count * n_lag; ++i) {
                                const Vector x = draw_vec(d, rng);
                                locals[p].accumulate(x);
                                everything.push_back(x);
                            }
                        merge_batch(g, locals);
                    }
                    const oracle::BatchMoments ref = oracle::batch_moments(everything);
                    CHECK(oracle::rel_frobenius(g.second, ref.second) < 1e-12);
                    double mean_err = 0.0;
                    for (std::size_t i = 0; i < d; ++i)
                        mean_err = std::max(mean_err, std::abs(g.mean[i] - ref.mean[i]));
                    CHECK(mean_err < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("merge order: reversal changes results below 1e-12") {
    RngStream rng = make_rng_stream(7, 0, "moments");
    const std::size_t d = 3;
    std::vector<MomentAccumulator> locals(4, MomentAccumulator(d));
    for (auto& acc : locals)
        for (int i = 0; i < 6; ++i) acc.accumulate(draw_vec(d, rng));
    GlobalMoments fwd(d), rev(d);
    merge_batch(fwd, locals);
    std::vector<MomentAccumulator> reversed(locals.rbegin(), locals.rend());
    merge_batch(rev, reversed);
    CHECK(oracle::rel_frobenius(fwd.second, rev.second) < 1e-12);
}

TEST_CASE("covariance stays positive semidefinite") {
    RngStream rng = make_rng_stream(8, 0, "moments");
    const std::size_t d = 4;
    MomentAccumulator acc(d);
    for (int i = 0; i < 50; ++i) {
        acc.accumulate(draw_vec(d, rng));
        if (acc.count < 2) continue;
        const EigenDecomposition e = sym_eigen(covariance(acc));
        for (double v : e.values) CHECK(v >= -1e-9);
    }
    // Monte Carlo agreement with a diagonal truth
    MomentAccumulator mc(2);
    for (int i = 0; i < 100000; ++i) {
        Vector x = {std::sqrt(2.0) * rng.normal(), rng.normal()};
        mc.accumulate(x);
    }
    Matrix truth(2, 2);
    truth(0, 0) = 2.0;
    truth(1, 1) = 1.0;
    CHECK(oracle::rel_frobenius(covariance(mc), truth) < 0.05);
}
