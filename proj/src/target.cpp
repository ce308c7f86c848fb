#include "diam/target.hpp"

#include <cmath>
#include <cstring>

#include "diam/rng.hpp"
#include "target_io.hpp"

namespace diam {

namespace {

constexpr char kTargetMagic[8] = {'D', 'I', 'A', 'M', 'T', 'G', 'T', '\0'};
constexpr std::uint32_t kTargetVersion = 1;
constexpr std::uint32_t kEndianSentinel = 0x01020304u;

/// B = A·Aᵀ for a d×r standard-normal A drawn row-major from the seed stream.
Matrix random_gram(std::size_t d, std::size_t r, std::uint64_t seed) {
    RngStream rng = make_rng_stream(seed, 0, "target");
    Matrix a(d, r);
    for (double& v : a.a) v = rng.normal();
    Matrix b(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < r; ++k) s += a(i, k) * a(j, k);
            b(i, j) = s;
            b(j, i) = s;
        }
    return b;
}

void finish_gaussian(Target& t) {
    t.covariance = spd_invert(t.precision);
    EigenDecomposition eig = sym_eigen(t.covariance);
    t.eigvecs = std::move(eig.vectors);
    t.eigvecs_t = transpose(t.eigvecs);
    t.eigvals = std::move(eig.values);
    t.mean.assign(t.dim, 0.0);
    t.eigen_mean.assign(t.dim, 0.0);
    t.eigen_var = t.eigvals;
    t.b_coeffs.assign(t.dim, 0.0);
}

}  // namespace

const char* target_kind_name(TargetKind kind) {
    switch (kind) {
        case TargetKind::Pi1: return "pi1";
        case TargetKind::Pi2: return "pi2";
        case TargetKind::Pi3: return "pi3";
        case TargetKind::Pi4: return "pi4";
        case TargetKind::Pi5: return "pi5";
        case TargetKind::Pi6: return "pi6";
    }
    return "?";
}

TargetKind target_kind_from_name(const std::string& name) {
    for (TargetKind k : {TargetKind::Pi1, TargetKind::Pi2, TargetKind::Pi3, TargetKind::Pi4,
                         TargetKind::Pi5, TargetKind::Pi6})
        if (name == target_kind_name(k)) return k;
    fail(ErrorCode::InvalidArgument, "unknown target kind: " + name);
}

Target build_target(TargetKind kind, std::size_t dim, std::uint64_t seed, double sigma2,
                    double twist_b) {
    require(dim >= 2, ErrorCode::InvalidDimension, "target dimension must be >= 2");

    Target t;
    t.kind = kind;
    t.dim = dim;
    t.seed = seed;

    switch (kind) {
        case TargetKind::Pi1: {
            Matrix b = random_gram(dim, dim, seed);
            for (std::size_t i = 0; i < dim; ++i) b(i, i) += 1.0;
            t.precision = std::move(b);
            finish_gaussian(t);
            break;
        }
        case TargetKind::Pi2: {
            Matrix b = random_gram(dim, dim, seed);
            const double inv_d = 1.0 / static_cast<double>(dim);
            for (double& v : b.a) v *= inv_d;
            for (std::size_t i = 0; i < dim; ++i) b(i, i) += 1.0;
            t.precision = std::move(b);
            finish_gaussian(t);
            break;
        }
        case TargetKind::Pi3: {
            require(dim >= 10, ErrorCode::InvalidDimension, "pi3 needs d >= 10 so that r = d/10 >= 1");
            Matrix b = random_gram(dim, dim / 10, seed);
            for (std::size_t i = 0; i < dim; ++i) b(i, i) += 1.0;
            t.precision = std::move(b);
            finish_gaussian(t);
            break;
        }
        case TargetKind::Pi4: {
            t.sigma2 = sigma2 > 0.0 ? sigma2 : 1.0 / static_cast<double>(dim);
            // eigenbasis comes from pi1 with the same seed
            Target base = build_target(TargetKind::Pi1, dim, seed);
            const double inv_s2 = 1.0 / t.sigma2;
            Vector cov_eigs(dim), prec_eigs(dim);
            for (std::size_t n = 1; n <= dim; ++n) {
                const double nd = static_cast<double>(n);
                prec_eigs[n - 1] = inv_s2 / (nd * nd * nd * nd) + 1.0;
                cov_eigs[n - 1] = 1.0 / prec_eigs[n - 1];
            }
            t.precision = scaled_eigen_product(base.eigvecs, prec_eigs);
            t.covariance = scaled_eigen_product(base.eigvecs, cov_eigs);
            t.eigvecs = std::move(base.eigvecs);
            t.eigvecs_t = std::move(base.eigvecs_t);
            t.eigvals = std::move(cov_eigs);
            t.mean.assign(dim, 0.0);
            t.eigen_mean.assign(dim, 0.0);
            t.eigen_var = t.eigvals;
            t.b_coeffs.assign(dim, 0.0);
            break;
        }
        case TargetKind::Pi5:
        case TargetKind::Pi6: {
            require(dim % 20 == 0, ErrorCode::InvalidDimension,
                    "twisted targets need d divisible by 20");
            t.twist_b = twist_b >= 0.0 ? twist_b : (kind == TargetKind::Pi5 ? 0.3 : 2.0);
            Target base = build_target(TargetKind::Pi1, dim, seed);
            t.eigvecs = std::move(base.eigvecs);
            t.eigvecs_t = std::move(base.eigvecs_t);
            t.eigvals = std::move(base.eigvals);

            const std::size_t m = dim / 10;  // last twisted index, 1-based
            const double root_d = std::sqrt(static_cast<double>(dim));
            t.b_coeffs.assign(dim, 0.0);
            for (std::size_t i = 1; i < m; i += 2)  // 1-based odd i < d/10
                t.b_coeffs[i - 1] = t.twist_b / (t.eigvals[i - 1] * root_d);

            t.eigen_mean.assign(dim, 0.0);
            t.eigen_var = t.eigvals;
            for (std::size_t i = 2; i <= m; i += 2) {  // 1-based even i <= d/10
                const double bprev = t.b_coeffs[i - 2];
                const double s_prev = t.eigvals[i - 2];
                t.eigen_mean[i - 1] = -bprev * s_prev;
                t.eigen_var[i - 1] = t.eigvals[i - 1] + 2.0 * bprev * bprev * s_prev * s_prev;
            }
            t.mean = matvec(t.eigvecs, t.eigen_mean);
            t.covariance = scaled_eigen_product(t.eigvecs, t.eigen_var);
            break;
        }
    }
    return t;
}

double Target::log_density(std::span<const double> x) const {
    require(x.size() == dim, ErrorCode::DimensionMismatch, "log_density: wrong dimension");
    if (!twisted()) {
        const Vector px = sym_matvec(precision, x);
        return -0.5 * dot(x, px);
    }
    const Vector z = matvec(eigvecs_t, x);
    const Vector w = twist_map(b_coeffs, z);
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) s += w[i] * w[i] / eigvals[i];
    return -0.5 * s;
}

Vector twist_map(std::span<const double> b_coeffs, std::span<const double> z) {
    require(b_coeffs.size() == z.size(), ErrorCode::DimensionMismatch, "twist_map: size mismatch");
    Vector w(z.begin(), z.end());
    for (std::size_t i = 0; i + 1 < z.size(); i += 2)
        if (b_coeffs[i] != 0.0) w[i + 1] += b_coeffs[i] * z[i] * z[i];
    return w;
}

Vector untwist_map(std::span<const double> b_coeffs, std::span<const double> w) {
    require(b_coeffs.size() == w.size(), ErrorCode::DimensionMismatch, "untwist_map: size mismatch");
    Vector z(w.begin(), w.end());
    for (std::size_t i = 0; i + 1 < w.size(); i += 2)
        if (b_coeffs[i] != 0.0) z[i + 1] -= b_coeffs[i] * w[i] * w[i];
    return z;
}

AnalyticMoments analytic_moments(const Target& t) {
    return {t.mean, t.covariance, t.eigen_mean, t.eigen_var};
}

void write_target(binio::Writer& w, const Target& t) {
    w.raw(kTargetMagic, sizeof kTargetMagic);
    w.u32(kTargetVersion);
    w.u32(kEndianSentinel);
    w.u32(static_cast<std::uint32_t>(t.kind));
    w.u64(t.dim);
    w.u64(t.seed);
    w.f64(t.sigma2);
    w.f64(t.twist_b);
    w.mat(t.precision);
    w.mat(t.covariance);
    w.mat(t.eigvecs);
    w.vec(t.eigvals);
    w.vec(t.b_coeffs);
    w.vec(t.mean);
    w.vec(t.eigen_mean);
    w.vec(t.eigen_var);
}

Target read_target(binio::Reader& r) {
    char magic[8];
    r.raw(magic, sizeof magic);
    require(std::memcmp(magic, kTargetMagic, sizeof magic) == 0, ErrorCode::Io,
            "not a target file");
    require(r.u32() == kTargetVersion, ErrorCode::Io, "unsupported target file version");
    require(r.u32() == kEndianSentinel, ErrorCode::Io, "endianness mismatch in target data");
    Target t;
    t.kind = static_cast<TargetKind>(r.u32());
    t.dim = r.u64();
    t.seed = r.u64();
    t.sigma2 = r.f64();
    t.twist_b = r.f64();
    t.precision = r.mat();
    t.covariance = r.mat();
    t.eigvecs = r.mat();
    t.eigvals = r.vec();
    t.b_coeffs = r.vec();
    t.mean = r.vec();
    t.eigen_mean = r.vec();
    t.eigen_var = r.vec();
    t.eigvecs_t = transpose(t.eigvecs);
    require(t.dim >= 2 && t.covariance.rows == t.dim && t.eigvals.size() == t.dim,
            ErrorCode::Io, "corrupt target data");
    return t;
}

void target_save(const Target& t, const std::string& path) {
    binio::Writer w(path);
    write_target(w, t);
    w.close();
}

Target target_load(const std::string& path) {
    binio::Reader r(path);
    return read_target(r);
}

}  // namespace diam
