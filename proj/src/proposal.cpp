#include "diam/proposal.hpp"

#include <algorithm>
#include <cmath>

namespace diam {

const char* kernel_kind_name(KernelKind kind) {
    switch (kind) {
        case KernelKind::RW: return "rw";
        case KernelKind::PCN: return "pcn";
        case KernelKind::AM: return "am";
        case KernelKind::DIAM: return "diam";
    }
    return "?";
}

KernelKind kernel_kind_from_name(const std::string& name) {
    for (KernelKind k : {KernelKind::RW, KernelKind::PCN, KernelKind::AM, KernelKind::DIAM})
        if (name == kernel_kind_name(k)) return k;
    fail(ErrorCode::InvalidArgument, "unknown kernel: " + name);
}

KernelConfig KernelConfig::defaults(KernelKind kind, std::size_t dim) {
    KernelConfig c;
    c.kind = kind;
    c.dim = dim;
    c.beta_init = std::min(2.4 / std::sqrt(static_cast<double>(dim)), 0.5);
    c.n_lag = std::max<std::size_t>(1, dim / 2);
    if (c.pcn_form()) {
        c.band_lo = 0.3;
        c.band_hi = 0.5;
        c.beta_max = 1.0;
    } else {
        c.band_lo = 0.1;
        c.band_hi = 0.3;
        c.beta_max = 10.0;
    }
    // burn-in must outlast the step-size equilibration: the descent from
    // beta_init at x1.1 per lag window alone takes ~12d iterations, and
    // moments polluted by that frozen phase poison the first factors
    c.n0 = 25 * dim;
    c.n_ref_start = 10 * dim;
    return c;
}

namespace {

/// ½·inflation⁻²·|A⁻¹(z − x_ref)|², through a triangular solve unless the
/// explicit inverse was precomputed.
double quad_term(const KernelConfig& cfg, const ChainState& state, std::span<const double> z) {
    const std::size_t d = cfg.dim;
    Vector centered(d);
    for (std::size_t i = 0; i < d; ++i) centered[i] = z[i] - state.x_ref[i];
    const Vector y = state.factor_inv ? tri_matvec(*state.factor_inv, centered)
                                      : tri_solve(state.factor, centered);
    double s = 0.0;
    for (double v : y) s += v * v;
    const double infl = cfg.noise_inflation();
    return 0.5 * s / (infl * infl);
}

struct CandidateEval {
    Vector candidate;
    double log_pi;
    double quad;
    double log_ratio;
};

CandidateEval evaluate(const KernelConfig& cfg, const Target& target, const ChainState& state,
                       std::span<const double> noise) {
    CandidateEval ev;
    ev.candidate = propose(cfg, state, noise);
    ev.log_pi = target.log_density(ev.candidate);
    if (cfg.pcn_form()) {
        ev.quad = quad_term(cfg, state, ev.candidate);
        ev.log_ratio = (ev.log_pi + ev.quad) - (state.log_pi + state.quad);
    } else {
        ev.quad = 0.0;
        ev.log_ratio = ev.log_pi - state.log_pi;
    }
    return ev;
}

}  // namespace

ChainState init_chain(const KernelConfig& cfg, const Target& target, std::span<const double> x0,
                      RngStream& noise_rng) {
    require(cfg.dim == target.dim, ErrorCode::DimensionMismatch, "kernel/target dimension mismatch");
    require(x0.size() == cfg.dim, ErrorCode::DimensionMismatch, "initial state dimension mismatch");
    require(cfg.n_lag >= 1, ErrorCode::InvalidArgument, "n_lag must be positive");

    ChainState s;
    s.x.assign(x0.begin(), x0.end());
    s.beta = cfg.beta_init;
    s.factor = cfg.proposal_cov ? jittered_cholesky(*cfg.proposal_cov, cfg)
                                : LowerTriangular::identity(cfg.dim);
    if (cfg.use_explicit_inverse) s.factor_inv = invert_lower(s.factor);
    if (cfg.ref_mode == RefMode::Fixed) {
        require(cfg.fixed_ref.size() == cfg.dim, ErrorCode::DimensionMismatch,
                "fixed reference point dimension mismatch");
        s.x_ref = cfg.fixed_ref;
    } else {
        s.x_ref.assign(cfg.dim, 0.0);
    }
    s.log_pi = target.log_density(s.x);
    s.quad = cfg.pcn_form() ? quad_term(cfg, s, s.x) : 0.0;
    s.batch_acc = MomentAccumulator(cfg.dim);
    s.cum_acc = MomentAccumulator(cfg.dim);
    s.noise_ctr_at_batch = noise_rng.draw_count();
    regenerate_noise(cfg, s, noise_rng);
    return s;
}

Vector propose(const KernelConfig& cfg, const ChainState& state, std::span<const double> noise) {
    require(noise.size() == cfg.dim, ErrorCode::DimensionMismatch, "propose: noise size mismatch");
    require(state.x.size() == cfg.dim, ErrorCode::DimensionMismatch, "propose: state size mismatch");
    Vector out(cfg.dim);
    if (cfg.pcn_form()) {
        const double contract = std::sqrt(std::max(0.0, 1.0 - state.beta * state.beta));
        for (std::size_t i = 0; i < cfg.dim; ++i)
            out[i] = state.x_ref[i] + contract * (state.x[i] - state.x_ref[i]) + noise[i];
    } else {
        for (std::size_t i = 0; i < cfg.dim; ++i) out[i] = state.x[i] + noise[i];
    }
    return out;
}

double log_accept_ratio(const KernelConfig& cfg, const Target& target, const ChainState& state,
                        std::span<const double> candidate) {
    const double lp = target.log_density(candidate);
    if (!cfg.pcn_form()) return lp - state.log_pi;
    const double q = quad_term(cfg, state, candidate);
    return (lp + q) - (state.log_pi + state.quad);
}

bool mh_step(const KernelConfig& cfg, const Target& target, ChainState& state,
             RngStream& uniform_rng) {
    require(state.noise_pos < cfg.n_lag, ErrorCode::InvalidArgument,
            "mh_step: noise batch exhausted; lag_update was not run");
    const std::span<const double> xi(&state.noise.a[state.noise_pos * cfg.dim], cfg.dim);
    ++state.noise_pos;

    const CandidateEval ev = evaluate(cfg, target, state, xi);
    const double u = uniform_rng.uniform_open();
    const bool accepted = std::log(u) < ev.log_ratio;
    if (accepted) {
        state.x = ev.candidate;
        state.log_pi = ev.log_pi;
        state.quad = ev.quad;
        ++state.n_accepted;
    }
    ++state.n;
    // cum_acc is folded in batch-wise by the runner at merge time
    if (state.n > cfg.n0) state.batch_acc.accumulate(state.x);
    return accepted;
}

double lag_update(const KernelConfig& cfg, ChainState& state, const GlobalMoments& snapshot,
                  RngStream& noise_rng) {
    require(state.n % cfg.n_lag == 0, ErrorCode::InvalidArgument,
            "lag_update: not at a lag boundary");
    const double rate =
        static_cast<double>(state.n_accepted) / static_cast<double>(cfg.n_lag);
    if (cfg.adapt_beta) {
        if (rate > cfg.band_hi)
            state.beta *= cfg.beta_adapt_factor;
        else if (rate < cfg.band_lo)
            state.beta /= cfg.beta_adapt_factor;
        state.beta = std::clamp(state.beta, cfg.beta_min, cfg.beta_max);
    }
    state.n_accepted = 0;

    const bool wants_moments = cfg.adapts_covariance() || cfg.ref_mode == RefMode::AdaptiveMean;
    if (wants_moments && state.n >= cfg.n0) {
        const BlendedMoments blended = blend_local_global(state.batch_acc, snapshot);
        if (cfg.adapts_covariance() && blended.count >= 2) {
            double trace = 0.0;
            for (std::size_t i = 0; i < cfg.dim; ++i) trace += blended.cov(i, i);
            // an all-rejected window leaves a covariance at rounding level;
            // keep the previous factor rather than factorizing noise
            const double floor = 1e-12 * (1.0 + dot(blended.mean, blended.mean));
            if (trace > floor && std::isfinite(trace)) {
                LowerTriangular factor = jittered_cholesky(blended.cov, cfg);
                bool usable = true;
                if (cfg.pcn_form()) {
                    // a factor built from a near-frozen window can strand the
                    // current state in the proposal tail, where the weighted
                    // quadratic dwarfs any density gain and the chain locks
                    // up; leave the old factor and retry next boundary
                    Vector centered(cfg.dim);
                    for (std::size_t i = 0; i < cfg.dim; ++i)
                        centered[i] = state.x[i] - state.x_ref[i];
                    const Vector y = tri_solve(factor, centered);
                    const double infl = cfg.noise_inflation();
                    const double q = 0.5 * dot(y, y) / (infl * infl);
                    // q sits near d/2 once the factor matches the target
                    usable = q <= 5.0 * static_cast<double>(cfg.dim);
                }
                if (usable) {
                    state.factor = std::move(factor);
                    if (cfg.use_explicit_inverse) state.factor_inv = invert_lower(state.factor);
                }
            }
        }
        if (cfg.ref_mode == RefMode::AdaptiveMean && state.n >= cfg.n_ref_start &&
            blended.count > 0)
            state.x_ref = blended.mean;
    }

    if (cfg.pcn_form()) state.quad = quad_term(cfg, state, state.x);

    state.noise_ctr_at_batch = noise_rng.draw_count();
    regenerate_noise(cfg, state, noise_rng);
    return rate;
}

LowerTriangular jittered_cholesky(const Matrix& cov, const KernelConfig& cfg) {
    try {
        return cholesky(cov);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NotPositiveDefinite) throw;
    }
    double trace = 0.0;
    for (std::size_t i = 0; i < cov.rows; ++i) trace += cov(i, i);
    const double scale = trace / static_cast<double>(cov.rows);
    for (double eps = cfg.jitter_eps0; eps <= cfg.jitter_eps_max; eps *= cfg.jitter_growth) {
        Matrix padded = cov;
        for (std::size_t i = 0; i < cov.rows; ++i) padded(i, i) += eps * scale;
        try {
            return cholesky(padded);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NotPositiveDefinite) throw;
        }
    }
    fail(ErrorCode::NotPositiveDefinite,
         "covariance not factorizable after jitter escalation (dim " + std::to_string(cov.rows) +
             ", trace " + std::to_string(trace) + ")");
}

LowerTriangular invert_lower(const LowerTriangular& l) {
    const std::size_t n = l.dim;
    LowerTriangular inv(n);
    Vector e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        const Vector col = tri_solve(l, e);
        for (std::size_t i = j; i < n; ++i) inv(i, j) = col[i];
        e[j] = 0.0;
    }
    return inv;
}

void regenerate_noise(const KernelConfig& cfg, ChainState& state, RngStream& noise_rng) {
    const std::size_t d = cfg.dim;
    if (state.noise.rows != cfg.n_lag || state.noise.cols != d)
        state.noise = Matrix(cfg.n_lag, d);
    const double scale = state.beta * cfg.noise_inflation();
    Vector w(d);
    for (std::size_t r = 0; r < cfg.n_lag; ++r) {
        for (std::size_t i = 0; i < d; ++i) w[i] = noise_rng.normal();
        const Vector xi = tri_matvec(state.factor, w);
        for (std::size_t i = 0; i < d; ++i) state.noise(r, i) = scale * xi[i];
    }
    state.noise_pos = 0;
}

}  // namespace diam
