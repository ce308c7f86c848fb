#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "diam/linalg.hpp"
#include "diam/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace diam;

namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.begin()->size());
    std::size_t i = 0;
    for (const auto& row : rows) {
        std::size_t j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

LowerTriangular lower_from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const Matrix m = from_rows(rows);
    LowerTriangular l(m.rows);
    l.a = m.a;
    return l;
}

}  // namespace

TEST_CASE("cholesky basics") {
    const LowerTriangular id3 = cholesky(Matrix::identity(3));
    CHECK(oracle::max_abs_diff(factor_to_covariance(id3), Matrix::identity(3)) == 0.0);

    const LowerTriangular l = cholesky(from_rows({{4, 2}, {2, 3}}));
    CHECK(l(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(l(0, 1) == 0.0);
    CHECK(l(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

    CHECK(throws_code(ErrorCode::NotPositiveDefinite,
                      [] { cholesky(from_rows({{1, 2}, {2, 1}})); }));
}

TEST_CASE("spd_invert basics and residual") {
    CHECK(oracle::max_abs_diff(spd_invert(Matrix::identity(4)), Matrix::identity(4)) < 1e-15);

    const Matrix inv = spd_invert(from_rows({{2, 0}, {0, 5}}));
    CHECK(inv(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(inv(1, 1) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(inv(0, 1) == 0.0);

    RngStream rng = make_rng_stream(11, 0, "linalg-test");
    const Matrix m = oracle::random_spd(6, rng);
    const Matrix residual = matmul(m, spd_invert(m));
    CHECK(oracle::rel_frobenius(residual, Matrix::identity(6)) < 1e-8);
}

TEST_CASE("matvec kernels") {
    const Vector v123 = {1, 2, 3};
    CHECK(sym_matvec(Matrix::identity(3), v123) == Vector{1, 2, 3});
    CHECK(sym_matvec(from_rows({{2, 1}, {1, 2}}), Vector{1, 1}) == Vector{3, 3});
    CHECK(sym_matvec(Matrix(3, 3), v123) == Vector{0, 0, 0});

    CHECK(tri_matvec(LowerTriangular::identity(3), v123) == v123);
    CHECK(tri_matvec(lower_from_rows({{1, 0}, {2, 3}}), Vector{1, 1}) == Vector{1, 5});
    CHECK(throws_code(ErrorCode::DimensionMismatch,
                      [&] { tri_matvec(LowerTriangular::identity(2), v123); }));
}

TEST_CASE("tri_solve") {
    const Vector v = {0.5, -2, 3};
    CHECK(tri_solve(LowerTriangular::identity(3), v) == v);
    CHECK(tri_solve(lower_from_rows({{2, 0}, {1, 1}}), Vector{2, 2}) == Vector{1, 1});
    CHECK(throws_code(ErrorCode::SingularDiagonal,
                      [] { tri_solve(lower_from_rows({{1, 0}, {1, 0}}), Vector{1, 1}); }));
}

TEST_CASE("rank1_update") {
    CHECK(rank1_update(Matrix(2, 2), Vector{1, 1}, 1.0).a == from_rows({{1, 1}, {1, 1}}).a);
    CHECK(rank1_update(Matrix::identity(2), Vector{1, 0}, 2.0).a ==
          from_rows({{3, 0}, {0, 1}}).a);

    RngStream rng = make_rng_stream(12, 0, "linalg-test");
    const Matrix m = oracle::random_spd(3, rng);
    Vector v(3);
    for (double& x : v) x = rng.normal();
    const double scale = 0.7;
    const Matrix got = rank1_update(m, v, scale);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(got(i, j) == m(i, j) + scale * v[i] * v[j]);
}

TEST_CASE("sym_eigen examples") {
    const EigenDecomposition diag_case = sym_eigen(from_rows({{3, 0, 0}, {0, 1, 0}, {0, 0, 2}}));
    CHECK(diag_case.values == Vector{1, 2, 3});
    // permuted identity columns
    CHECK(std::abs(diag_case.vectors(1, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(diag_case.vectors(2, 1)) == doctest::Approx(1.0));
    CHECK(std::abs(diag_case.vectors(0, 2)) == doctest::Approx(1.0));

    const EigenDecomposition e = sym_eigen(from_rows({{2, 1}, {1, 2}}));
    CHECK(e.values[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.values[1] == doctest::Approx(3.0).epsilon(1e-12));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(dot(Vector{e.vectors(0, 0), e.vectors(1, 0)}, Vector{r, -r})) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(dot(Vector{e.vectors(0, 1), e.vectors(1, 1)}, Vector{r, r})) ==
          doctest::Approx(1.0).epsilon(1e-12));

    RngStream rng = make_rng_stream(13, 0, "linalg-test");
    const Matrix m = oracle::random_spd(8, rng);
    const EigenDecomposition big = sym_eigen(m);
    const Matrix rebuilt = scaled_eigen_product(big.vectors, big.values);
    CHECK(oracle::rel_frobenius(rebuilt, m) < 1e-8);
    // columns orthonormal
    const Matrix vtv = matmul(transpose(big.vectors), big.vectors);
    CHECK(oracle::max_abs_diff(vtv, Matrix::identity(8)) < 1e-10);
}

TEST_CASE("spd property sweep: factor, inverse, eigen floor, solve chain") {
    RngStream rng = make_rng_stream(14, 0, "linalg-test");
    for (std::size_t dim : {2u, 3u, 5u, 9u, 16u}) {
        const Matrix m = oracle::random_spd(dim, rng);

        const LowerTriangular l = cholesky(m);
        CHECK(oracle::rel_frobenius(factor_to_covariance(l), m) < 1e-10);

        const Matrix inv = spd_invert(m);
        CHECK(oracle::rel_frobenius(matmul(m, inv), Matrix::identity(dim)) < 1e-8);

        const EigenDecomposition e = sym_eigen(m);
        for (double lambda : e.values) CHECK(lambda >= 1.0 - 1e-9);

        Vector v(dim);
        for (double& x : v) x = rng.normal();
        // L y = v, Lᵀ z = y reproduces m⁻¹ v
        const Vector z = tri_solve_transposed(l, tri_solve(l, v));
        const Vector want = sym_matvec(inv, v);
        for (std::size_t i = 0; i < dim; ++i)
            CHECK(z[i] == doctest::Approx(want[i]).epsilon(1e-8));
    }
}
