#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>

#include "diam/diagnostics.hpp"
#include "diam/rng.hpp"
#include "diam/target.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace diam;

TEST_CASE("construction is deterministic per seed") {
    const Target a = build_target(TargetKind::Pi1, 4, 7);
    const Target b = build_target(TargetKind::Pi1, 4, 7);
    CHECK(a.covariance.a == b.covariance.a);
    CHECK(a.precision.a == b.precision.a);
    const Target c = build_target(TargetKind::Pi1, 4, 8);
    CHECK(a.covariance.a != c.covariance.a);
}

TEST_CASE("pi2 is well conditioned") {
    const Target t = build_target(TargetKind::Pi2, 40, 3);
    CHECK(t.condition_number() < 20.0);
}

TEST_CASE("pi3 gram matrix has rank d/10") {
    const Target t = build_target(TargetKind::Pi3, 40, 3);
    Matrix b = t.precision;
    for (std::size_t i = 0; i < b.rows; ++i) b(i, i) -= 1.0;
    const EigenDecomposition e = sym_eigen(b);
    const double lead = e.values.back();
    std::size_t nonzero = 0;
    for (double v : e.values)
        if (v > 1e-8 * lead) ++nonzero;
    CHECK(nonzero == 4);
}

TEST_CASE("dimension preconditions") {
    CHECK(throws_code(ErrorCode::InvalidDimension, [] { build_target(TargetKind::Pi1, 1, 0); }));
    CHECK(throws_code(ErrorCode::InvalidDimension, [] { build_target(TargetKind::Pi3, 9, 0); }));
    CHECK(throws_code(ErrorCode::InvalidDimension, [] { build_target(TargetKind::Pi5, 30, 0); }));
}

TEST_CASE("log density") {
    SUBCASE("maximized at the origin, value 0") {
        RngStream rng = make_rng_stream(21, 0, "targets");
        for (TargetKind kind : {TargetKind::Pi1, TargetKind::Pi2, TargetKind::Pi4,
                                TargetKind::Pi5, TargetKind::Pi6}) {
            const std::size_t d = 20;
            const Target t = build_target(kind, d, 5);
            CHECK(t.log_density(Vector(d, 0.0)) == 0.0);
            for (int i = 0; i < 100; ++i) {
                Vector x(d);
                for (double& v : x) v = 3.0 * rng.normal();
                CHECK(t.log_density(x) <= 0.0);
            }
        }
    }

    SUBCASE("pi1 at d=2 matches a hand-inverted covariance") {
        const Target t = build_target(TargetKind::Pi1, 2, 11);
        const Matrix c = t.covariance;
        const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
        // direct 2x2 inverse
        const double p00 = c(1, 1) / det, p11 = c(0, 0) / det, p01 = -c(0, 1) / det;
        RngStream rng = make_rng_stream(22, 0, "targets");
        for (int i = 0; i < 20; ++i) {
            const Vector x = {rng.normal(), rng.normal()};
            const double want = -0.5 * (x[0] * (p00 * x[0] + p01 * x[1]) +
                                        x[1] * (p01 * x[0] + p11 * x[1]));
            CHECK(t.log_density(x) == doctest::Approx(want).epsilon(1e-8));
        }
    }

    SUBCASE("zero twist reduces pi5 to pi1") {
        const std::size_t d = 20;
        const Target flat = build_target(TargetKind::Pi5, d, 9, 0.0, 0.0);
        const Target base = build_target(TargetKind::Pi1, d, 9);
        RngStream rng = make_rng_stream(23, 0, "targets");
        for (int i = 0; i < 20; ++i) {
            Vector x(d);
            for (double& v : x) v = rng.normal();
            CHECK(flat.log_density(x) == doctest::Approx(base.log_density(x)).epsilon(1e-10));
        }
        for (std::size_t i = 0; i < d; ++i) {
            CHECK(flat.eigen_mean[i] == 0.0);
            CHECK(flat.eigen_var[i] == doctest::Approx(base.eigvals[i]).epsilon(1e-14));
        }
    }

    SUBCASE("dimension mismatch") {
        const Target t = build_target(TargetKind::Pi1, 4, 1);
        CHECK(throws_code(ErrorCode::DimensionMismatch,
                          [&] { (void)t.log_density(Vector{1, 2}); }));
    }
}

TEST_CASE("twist map") {
    SUBCASE("zero coefficients give the identity") {
        const Vector b(6, 0.0);
        const Vector z = {1, 2, 3, 4, 5, 6};
        CHECK(twist_map(b, z) == z);
        CHECK(untwist_map(b, z) == z);
    }

    SUBCASE("direct substitution at d=20") {
        Vector b(20, 0.0);
        b[0] = 1.0;  // paper's b_1
        Vector z(20, 0.0);
        z[0] = 2.0;
        const Vector w = twist_map(b, z);
        CHECK(w[1] == 4.0);
        CHECK(w[0] == 2.0);
    }

    SUBCASE("roundtrip on random vectors") {
        const Target t = build_target(TargetKind::Pi5, 20, 13);
        RngStream rng = make_rng_stream(24, 0, "targets");
        for (int i = 0; i < 100; ++i) {
            Vector z(20);
            for (double& v : z) v = rng.normal();
            const Vector back = untwist_map(t.b_coeffs, twist_map(t.b_coeffs, z));
            for (std::size_t k = 0; k < z.size(); ++k)
                CHECK(back[k] == doctest::Approx(z[k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("analytic moments") {
    SUBCASE("pi1: zero mean, covariance C") {
        const Target t = build_target(TargetKind::Pi1, 10, 2);
        const AnalyticMoments m = analytic_moments(t);
        CHECK(m.mean == Vector(10, 0.0));
        CHECK(m.cov.a == t.covariance.a);
    }

    SUBCASE("twisted closed forms vs direct simulation of the twist") {
        const std::size_t d = 20;
        const Target t = build_target(TargetKind::Pi5, d, 17);
        const double s1 = t.eigvals[0], s2 = t.eigvals[1];
        const double b1 = t.b_coeffs[0];
        CHECK(b1 == doctest::Approx(0.3 / (s1 * std::sqrt(20.0))).epsilon(1e-14));
        CHECK(t.eigen_mean[1] == doctest::Approx(-b1 * s1).epsilon(1e-14));
        CHECK(t.eigen_var[1] == doctest::Approx(s2 + 2 * b1 * b1 * s1 * s1).epsilon(1e-14));

        // 1e7 exact base draws pushed through the inverse twist
        RngStream rng = make_rng_stream(25, 0, "targets");
        const std::size_t n = 10000000;
        double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
        const double sd1 = std::sqrt(s1), sd2 = std::sqrt(s2);
        for (std::size_t i = 0; i < n; ++i) {
            const double w1 = sd1 * rng.normal();
            const double w2 = sd2 * rng.normal();
            const double z2 = w2 - b1 * w1 * w1;  // second coordinate of the untwist
            sum += z2;
            const double c = z2 - t.eigen_mean[1];
            sum2 += c * c;
            sum4 += c * c * c * c;
        }
        const double mc_mean = sum / static_cast<double>(n);
        const double mc_var = sum2 / static_cast<double>(n);
        const double m4 = sum4 / static_cast<double>(n);
        const double se_mean = std::sqrt(mc_var / static_cast<double>(n));
        const double se_var = std::sqrt((m4 - mc_var * mc_var) / static_cast<double>(n));
        CHECK(std::abs(mc_mean - t.eigen_mean[1]) < 3.0 * se_mean);
        CHECK(std::abs(mc_var - t.eigen_var[1]) < 3.0 * se_var);
    }

    SUBCASE("unit Jacobian: exact twisted sampler reproduces the full moments") {
        const std::size_t d = 20;
        const Target t = build_target(TargetKind::Pi5, d, 29);
        RngStream rng = make_rng_stream(26, 0, "targets");
        const std::size_t n = 200000;
        MomentAccumulator acc(d);
        Vector w(d);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < d; ++k) w[k] = std::sqrt(t.eigvals[k]) * rng.normal();
            const Vector x = matvec(t.eigvecs, untwist_map(t.b_coeffs, w));
            acc.accumulate(x);
        }
        CHECK(mean_error(acc.mean, t.mean) < 0.03);
        CHECK(oracle::rel_frobenius(covariance(acc), t.covariance) < 0.05);
    }
}

TEST_CASE("pi4 spectrum and conditioning") {
    const std::size_t d = 20;
    const Target loose = build_target(TargetKind::Pi4, d, 4);  // sigma2 = 1/d
    const double inv_s2 = static_cast<double>(d);
    for (std::size_t n = 1; n <= d; ++n) {
        const double want = 1.0 / (inv_s2 / (double(n) * n * n * n) + 1.0);
        CHECK(loose.eigvals[n - 1] == doctest::Approx(want).epsilon(1e-12));
    }
    const Target tight = build_target(TargetKind::Pi4, d, 4, 1.0 / (d * double(d)));
    CHECK(tight.condition_number() > loose.condition_number());
    const double ratio = tight.condition_number() / loose.condition_number();
    CHECK(ratio == doctest::Approx(static_cast<double>(d)).epsilon(0.25));
}

TEST_CASE("serialization roundtrip") {
    const Target t = build_target(TargetKind::Pi5, 20, 77);
    const std::string path = "/tmp/diam_test_target.bin";
    target_save(t, path);
    const Target back = target_load(path);
    CHECK(back.kind == t.kind);
    CHECK(back.dim == t.dim);
    CHECK(back.seed == t.seed);
    CHECK(back.covariance.a == t.covariance.a);
    CHECK(back.eigvecs.a == t.eigvecs.a);
    CHECK(back.b_coeffs == t.b_coeffs);
    CHECK(back.eigen_var == t.eigen_var);
    std::remove(path.c_str());
    CHECK(throws_code(ErrorCode::Io, [] { (void)target_load("/tmp/no_such_target.bin"); }));
}
