#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "diam/diagnostics.hpp"
#include "diam/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace diam;

TEST_CASE("acf") {
    SUBCASE("alternating trace is perfectly anticorrelated at lag 1") {
        Vector trace(1000);
        for (std::size_t i = 0; i < trace.size(); ++i) trace[i] = (i % 2 == 0) ? 1.0 : -1.0;
        const Vector rho = acf(trace, 3);
        CHECK(rho[0] == 1.0);
        CHECK(rho[1] == doctest::Approx(-1.0).epsilon(0.01));
    }

    SUBCASE("iid noise decorrelates") {
        RngStream rng = make_rng_stream(31, 0, "diag");
        Vector trace(100000);
        for (double& v : trace) v = rng.normal();
        const Vector rho = acf(trace, 20);
        for (std::size_t lag = 1; lag <= 20; ++lag) CHECK(std::abs(rho[lag]) < 0.02);
    }

    SUBCASE("AR(1) matches the geometric law") {
        RngStream rng = make_rng_stream(32, 0, "diag");
        const Vector trace = oracle::ar1_trace(0.9, 1000000, rng);
        const Vector rho = acf(trace, 20);
        for (std::size_t lag = 1; lag <= 20; ++lag)
            CHECK(std::abs(rho[lag] - std::pow(0.9, static_cast<double>(lag))) < 0.02);
    }

    SUBCASE("bounded in [-1, 1]") {
        RngStream rng = make_rng_stream(33, 0, "diag");
        const Vector trace = oracle::ar1_trace(0.99, 20000, rng);
        for (double r : acf(trace, 500)) {
            CHECK(r <= 1.0);
            CHECK(r >= -1.0);
        }
    }

    SUBCASE("degenerate and misuse cases") {
        CHECK(throws_code(ErrorCode::DegenerateTrace, [] { (void)acf(Vector(100, 3.14), 5); }));
        CHECK(throws_code(ErrorCode::InvalidArgument, [] { (void)acf(Vector{1, 2, 3, 4}, 2); }));
    }
}

TEST_CASE("iact and ess") {
    SUBCASE("iid trace sits near 1") {
        RngStream rng = make_rng_stream(34, 0, "diag");
        Vector trace(100000);
        for (double& v : trace) v = rng.normal();
        const double tau = iact(trace);
        CHECK(tau >= 0.8);
        CHECK(tau <= 1.3);
    }

    SUBCASE("AR(1) with coefficient 0.9 gives 1 + 2·rho/(1-rho) = 19") {
        RngStream rng = make_rng_stream(35, 0, "diag");
        const Vector trace = oracle::ar1_trace(0.9, 1000000, rng);
        const double tau = iact(trace);
        CHECK(std::abs(tau - 19.0) / 19.0 < 0.15);
    }

    SUBCASE("ess times iact recovers the length") {
        RngStream rng = make_rng_stream(36, 0, "diag");
        const Vector trace = oracle::ar1_trace(0.5, 5000, rng);
        CHECK(ess(trace) * iact(trace) == doctest::Approx(5000.0).epsilon(1e-9));
    }

    SUBCASE("invariant under affine maps") {
        RngStream rng = make_rng_stream(37, 0, "diag");
        const Vector trace = oracle::ar1_trace(0.8, 20000, rng);
        Vector mapped(trace.size());
        for (std::size_t i = 0; i < trace.size(); ++i) mapped[i] = -2.5 * trace[i] + 7.0;
        CHECK(iact(mapped) == doctest::Approx(iact(trace)).epsilon(1e-10));
    }
}

TEST_CASE("psrf") {
    SUBCASE("identical chains: zero between-chain variance") {
        MomentAccumulator a(1), b(1);
        for (double v : {1.0, 3.0}) {
            a.accumulate(Vector{v});
            b.accumulate(Vector{v});
        }
        const Vector r = psrf(make_psrf_input(std::vector<MomentAccumulator>{a, b}));
        CHECK(r[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
        CHECK(r[0] < 1.0);
    }

    SUBCASE("hand substitution: chains {1,3} and {2,4}") {
        MomentAccumulator a(1), b(1);
        a.accumulate(Vector{1});
        a.accumulate(Vector{3});
        b.accumulate(Vector{2});
        b.accumulate(Vector{4});
        // n=2, P=2: means 2 and 3, global 2.5, B = 2·(0.25+0.25) = 1,
        // within C = 1 each, W = (2/(1·2))·2 = 2,
        // R = 1/2 + (3/4)·(1/2) = 0.875
        const Vector r = psrf(make_psrf_input(std::vector<MomentAccumulator>{a, b}));
        CHECK(r[0] == doctest::Approx(std::sqrt(0.875)).epsilon(1e-12));
    }

    SUBCASE("approaches 1 from above as chains grow") {
        RngStream rng_a = make_rng_stream(38, 0, "diag");
        RngStream rng_b = make_rng_stream(38, 1, "diag");
        MomentAccumulator a(1), b(1);
        Vector rs;
        for (std::size_t total : {100u, 400u, 1600u}) {
            while (a.count < total) {
                a.accumulate(Vector{rng_a.normal()});
                b.accumulate(Vector{rng_b.normal()});
            }
            rs.push_back(psrf(make_psrf_input(std::vector<MomentAccumulator>{a, b}))[0]);
        }
        CHECK(std::abs(rs.back() - 1.0) < std::abs(rs.front() - 1.0) + 1e-6);
        CHECK(std::abs(rs.back() - 1.0) < 0.05);
    }

    SUBCASE("zero within variance") {
        MomentAccumulator a(1), b(1);
        a.accumulate(Vector{1});
        a.accumulate(Vector{1});
        b.accumulate(Vector{2});
        b.accumulate(Vector{2});
        CHECK(throws_code(ErrorCode::ZeroWithinVariance, [&] {
            (void)psrf(make_psrf_input(std::vector<MomentAccumulator>{a, b}));
        }));
    }
}

TEST_CASE("error norms") {
    Matrix truth = Matrix::identity(2);
    CHECK(cov_error(truth, truth) == 0.0);
    Matrix emp = truth;
    emp(0, 0) = 1.1;
    CHECK(cov_error(emp, truth) == doctest::Approx(0.1 / std::sqrt(2.0)).epsilon(1e-14));

    CHECK(mean_error(Vector{1, 2}, Vector{1, 2}) == 0.0);
    CHECK(mean_error(Vector{1, 2}, Vector{4, 6}) == doctest::Approx(5.0).epsilon(1e-15));

    // standard tolerances used by the convergence rules
    CHECK(kDefaultCovTol == 0.001);
    CHECK(kDefaultMeanTol == 0.01);
}
