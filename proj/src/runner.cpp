#include "diam/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <thread>

#include "binio.hpp"
#include "target_io.hpp"

namespace diam {

namespace {

constexpr char kCkptMagic[8] = {'D', 'I', 'A', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCkptVersion = 1;
constexpr std::uint32_t kEndianSentinel = 0x01020304u;

struct Chain {
    ChainState state;
    RngStream noise_rng;
    RngStream uniform_rng;
    std::vector<double> beta_hist;
    std::vector<double> acc_hist;
    std::vector<Vector> traces;  // one per functional
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_kernel_config(binio::Writer& w, const KernelConfig& k) {
    w.u32(static_cast<std::uint32_t>(k.kind));
    w.u64(k.dim);
    w.f64(k.beta_init);
    w.f64(k.inflation);
    w.u32(static_cast<std::uint32_t>(k.ref_mode));
    w.vec(k.fixed_ref);
    w.u64(k.n_lag);
    w.f64(k.band_lo);
    w.f64(k.band_hi);
    w.u64(k.n0);
    w.u64(k.n_ref_start);
    w.f64(k.beta_adapt_factor);
    w.f64(k.beta_min);
    w.f64(k.beta_max);
    w.u32(k.adapt_beta ? 1 : 0);
    w.u32(k.use_explicit_inverse ? 1 : 0);
    w.u32(k.proposal_cov ? 1 : 0);
    if (k.proposal_cov) w.mat(*k.proposal_cov);
    w.f64(k.jitter_eps0);
    w.f64(k.jitter_growth);
    w.f64(k.jitter_eps_max);
}

KernelConfig read_kernel_config(binio::Reader& r) {
    KernelConfig k;
    k.kind = static_cast<KernelKind>(r.u32());
    k.dim = r.u64();
    k.beta_init = r.f64();
    k.inflation = r.f64();
    k.ref_mode = static_cast<RefMode>(r.u32());
    k.fixed_ref = r.vec();
    k.n_lag = r.u64();
    k.band_lo = r.f64();
    k.band_hi = r.f64();
    k.n0 = r.u64();
    k.n_ref_start = r.u64();
    k.beta_adapt_factor = r.f64();
    k.beta_min = r.f64();
    k.beta_max = r.f64();
    k.adapt_beta = r.u32() != 0;
    k.use_explicit_inverse = r.u32() != 0;
    if (r.u32() != 0) k.proposal_cov = r.mat();
    k.jitter_eps0 = r.f64();
    k.jitter_growth = r.f64();
    k.jitter_eps_max = r.f64();
    return k;
}

void write_opt_f64(binio::Writer& w, const std::optional<double>& v) {
    w.u32(v ? 1 : 0);
    w.f64(v.value_or(0.0));
}

std::optional<double> read_opt_f64(binio::Reader& r) {
    const bool has = r.u32() != 0;
    const double v = r.f64();
    return has ? std::optional<double>(v) : std::nullopt;
}

void write_accumulator(binio::Writer& w, const MomentAccumulator& acc) {
    w.u64(acc.dim);
    w.u64(acc.count);
    w.vec(acc.mean);
    w.mat(acc.second);
}

MomentAccumulator read_accumulator(binio::Reader& r) {
    MomentAccumulator acc(r.u64());
    acc.count = r.u64();
    acc.mean = r.vec();
    acc.second = r.mat();
    return acc;
}

void write_lower(binio::Writer& w, const LowerTriangular& l) {
    w.u64(l.dim);
    w.raw(l.a.data(), l.a.size() * sizeof(double));
}

LowerTriangular read_lower(binio::Reader& r) {
    LowerTriangular l(r.u64());
    r.raw(l.a.data(), l.a.size() * sizeof(double));
    return l;
}

class Engine {
public:
    Engine(Target target, RunConfig cfg) : target_(std::move(target)), cfg_(std::move(cfg)) {
        validate_run_config(cfg_, target_);
        setup_functionals();
        global_ = GlobalMoments(target_.dim);
        for (std::size_t p = 0; p < cfg_.chains; ++p) {
            Chain c;
            c.noise_rng = make_chain_stream(cfg_.master_seed, p, "noise");
            c.uniform_rng = make_chain_stream(cfg_.master_seed, p, "uniform");
            RngStream init_rng = make_chain_stream(cfg_.master_seed, p, "init");
            Vector x0(target_.dim);
            for (double& v : x0) v = cfg_.init_dispersion * init_rng.normal();
            c.state = init_chain(cfg_.kernel, target_, x0, c.noise_rng);
            c.traces.resize(functional_names_.size());
            chains_.push_back(std::move(c));
        }
    }

    explicit Engine(binio::Reader& r) : target_(read_target_blob(r)) {
        cfg_.kernel = read_kernel_config(r);
        cfg_.chains = r.u64();
        cfg_.intervals_per_batch = r.u64();
        cfg_.max_batches = r.u64();
        cfg_.stop.cov_tol = read_opt_f64(r);
        cfg_.stop.mean_tol = read_opt_f64(r);
        cfg_.stop.psrf_tol = read_opt_f64(r);
        const bool has_max_samples = r.u32() != 0;
        const std::uint64_t max_samples = r.u64();
        if (has_max_samples) cfg_.stop.max_samples = max_samples;
        cfg_.stop.max_wall_seconds = read_opt_f64(r);
        cfg_.init_dispersion = r.f64();
        cfg_.master_seed = r.u64();
        cfg_.record_traces = r.u32() != 0;
        cfg_.trace_thin = r.u64();
        cfg_.trace_eigen_projections = r.u32() != 0;
        const std::size_t n_extra = r.u64();
        for (std::size_t i = 0; i < n_extra; ++i) cfg_.trace_eigen_indices.push_back(r.u64());
        cfg_.checkpoint_path = r.str();
        cfg_.threads = r.u64();
        validate_run_config(cfg_, target_);
        setup_functionals();

        batches_done_ = r.u64();
        global_ = GlobalMoments(target_.dim);
        global_.batches = r.u64();
        global_.count = r.u64();
        global_.mean = r.vec();
        global_.second = r.mat();
        wall_accum_ = r.f64();
        batch_seconds_ = r.vec();
        cov_hist_ = r.vec();
        mean_hist_ = r.vec();
        psrf_hist_ = r.vec();

        const std::size_t p_count = r.u64();
        require(p_count == cfg_.chains, ErrorCode::Io, "checkpoint chain count mismatch");
        for (std::size_t p = 0; p < p_count; ++p) {
            Chain c;
            c.state.x = r.vec();
            c.state.log_pi = r.f64();
            c.state.quad = r.f64();
            c.state.beta = r.f64();
            c.state.n = r.u64();
            c.state.n_accepted = r.u64();
            c.state.factor = read_lower(r);
            if (r.u32() != 0) c.state.factor_inv = read_lower(r);
            c.state.x_ref = r.vec();
            c.state.noise_ctr_at_batch = r.u64();
            const std::uint64_t uniform_ctr = r.u64();
            c.state.batch_acc = read_accumulator(r);
            c.state.cum_acc = read_accumulator(r);
            c.beta_hist = r.vec();
            c.acc_hist = r.vec();
            const std::size_t nf = r.u64();
            require(nf == functional_names_.size(), ErrorCode::Io,
                    "checkpoint functional count mismatch");
            c.traces.resize(nf);
            for (std::size_t f = 0; f < nf; ++f) c.traces[f] = r.vec();

            c.noise_rng = make_chain_stream(cfg_.master_seed, p, "noise");
            c.noise_rng.set_draw_count(c.state.noise_ctr_at_batch);
            c.uniform_rng = make_chain_stream(cfg_.master_seed, p, "uniform");
            c.uniform_rng.set_draw_count(uniform_ctr);
            regenerate_noise(cfg_.kernel, c.state, c.noise_rng);
            chains_.push_back(std::move(c));
        }
    }

    void override_stop(const StoppingRule& stop) {
        cfg_.stop = stop;
        validate_run_config(cfg_, target_);
    }

    void override_max_batches(std::size_t max_batches) { cfg_.max_batches = max_batches; }

    RunResult run(bool inline_threads) {
        const auto wall_start = std::chrono::steady_clock::now();
        auto elapsed = [&] { return wall_accum_ + seconds_since(wall_start); };

        std::string reason;
        for (;;) {
            if (cfg_.stop.max_samples && iterations_total() >= *cfg_.stop.max_samples) {
                reason = "max_samples";
                break;
            }
            if (batches_done_ >= cfg_.max_batches) {
                reason = "batch_cap";
                break;
            }
            if (cfg_.stop.max_wall_seconds && elapsed() >= *cfg_.stop.max_wall_seconds) {
                reason = "wall_time";
                break;
            }

            const auto batch_start = std::chrono::steady_clock::now();
            run_batch(inline_threads);

            std::vector<MomentAccumulator> locals;
            locals.reserve(chains_.size());
            for (Chain& c : chains_) locals.push_back(c.state.batch_acc);
            merge_batch(global_, locals);
            for (Chain& c : chains_) {
                merge_into(c.state.cum_acc, c.state.batch_acc);
                c.state.batch_acc.reset();
            }
            ++batches_done_;
            batch_seconds_.push_back(seconds_since(batch_start));

            double cov_err = std::nan("");
            double mean_err = std::nan("");
            if (global_.count >= 2) {
                cov_err = cov_error(covariance(global_), target_.covariance);
                mean_err = mean_error(global_.mean, target_.mean);
            }
            cov_hist_.push_back(cov_err);
            mean_hist_.push_back(mean_err);
            psrf_hist_.push_back(compute_max_psrf());

            if (!cfg_.checkpoint_path.empty()) save_checkpoint(elapsed());

            if (cfg_.stop.psrf_tol && std::isfinite(psrf_hist_.back()) &&
                psrf_hist_.back() <= *cfg_.stop.psrf_tol) {
                reason = "psrf";
                break;
            }
            if (cfg_.stop.cov_tol && std::isfinite(cov_err) && cov_err <= *cfg_.stop.cov_tol) {
                reason = "cov_tol";
                break;
            }
            if (cfg_.stop.mean_tol && std::isfinite(mean_err) &&
                mean_err <= *cfg_.stop.mean_tol) {
                reason = "mean_tol";
                break;
            }
        }
        wall_accum_ = elapsed();
        if (!cfg_.checkpoint_path.empty()) save_checkpoint(wall_accum_);
        return build_result(reason);
    }

private:
    static Target read_target_blob(binio::Reader& r) {
        char magic[8];
        r.raw(magic, sizeof magic);
        require(std::memcmp(magic, kCkptMagic, sizeof magic) == 0, ErrorCode::Io,
                "not a checkpoint file");
        require(r.u32() == kCkptVersion, ErrorCode::Io, "unsupported checkpoint version");
        require(r.u32() == kEndianSentinel, ErrorCode::Io, "endianness mismatch in checkpoint");
        return read_target(r);
    }

    void setup_functionals() {
        functional_names_.clear();
        projections_.clear();
        functional_names_.push_back("log_density");
        projections_.emplace_back();  // unused; log density comes from the chain cache
        auto add_projection = [&](const std::string& name, std::size_t col) {
            functional_names_.push_back(name);
            Vector v(target_.dim);
            for (std::size_t i = 0; i < target_.dim; ++i) v[i] = target_.eigvecs(i, col);
            projections_.push_back(std::move(v));
        };
        if (cfg_.trace_eigen_projections) {
            add_projection("proj_min", 0);
            add_projection("proj_max", target_.dim - 1);
        }
        for (std::size_t idx : cfg_.trace_eigen_indices)
            add_projection("proj_eig" + std::to_string(idx), idx - 1);
    }

    std::uint64_t iterations_total() const {
        return static_cast<std::uint64_t>(cfg_.chains) * cfg_.intervals_per_batch *
               batches_done_ * cfg_.kernel.n_lag;
    }

    std::size_t resolve_threads() const {
        std::size_t t = cfg_.threads;
        if (t == 0) {
            if (const char* env = std::getenv("DIAM_THREADS")) t = std::strtoull(env, nullptr, 10);
        }
        if (t == 0) t = std::thread::hardware_concurrency();
        if (t == 0) t = 1;
        return std::min(t, cfg_.chains);
    }

    void run_batch(bool inline_threads) {
        const std::size_t t_count = inline_threads ? 1 : resolve_threads();
        if (t_count <= 1 && inline_threads) {
            for (std::size_t p = 0; p < chains_.size(); ++p) run_chain_batch(p);
            return;
        }
        std::vector<std::exception_ptr> errors(chains_.size());
        std::vector<std::thread> pool;
        pool.reserve(t_count);
        for (std::size_t t = 0; t < t_count; ++t) {
            pool.emplace_back([this, t, t_count, &errors] {
                for (std::size_t p = t; p < chains_.size(); p += t_count) {
                    try {
                        run_chain_batch(p);
                    } catch (...) {
                        errors[p] = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        for (std::size_t p = 0; p < errors.size(); ++p) {
            if (!errors[p]) continue;
            try {
                std::rethrow_exception(errors[p]);
            } catch (const Error& e) {
                fail(e.code(), "chain " + std::to_string(p) + ": " + e.what());
            } catch (const std::exception& e) {
                throw std::runtime_error("chain " + std::to_string(p) + " panicked: " + e.what());
            }
        }
    }

    void run_chain_batch(std::size_t p) {
        Chain& c = chains_[p];
        const KernelConfig& k = cfg_.kernel;
        for (std::size_t m = 0; m < cfg_.intervals_per_batch; ++m) {
            for (std::size_t j = 0; j < k.n_lag; ++j) {
                mh_step(k, target_, c.state, c.uniform_rng);
                if (cfg_.record_traces && c.state.n > k.n0 &&
                    (c.state.n - k.n0 - 1) % cfg_.trace_thin == 0)
                    record_trace(c);
            }
            const double rate = lag_update(k, c.state, global_, c.noise_rng);
            c.beta_hist.push_back(c.state.beta);
            c.acc_hist.push_back(rate);
        }
    }

    void record_trace(Chain& c) {
        c.traces[0].push_back(c.state.log_pi);
        for (std::size_t f = 1; f < projections_.size(); ++f)
            c.traces[f].push_back(dot(projections_[f], c.state.x));
    }

    double compute_max_psrf() {
        if (chains_.size() < 2) return std::nan("");
        std::vector<MomentAccumulator> cums;
        cums.reserve(chains_.size());
        for (const Chain& c : chains_) cums.push_back(c.state.cum_acc);
        try {
            const Vector r = psrf(make_psrf_input(cums));
            double mx = 0.0;
            for (double v : r) mx = std::max(mx, v);
            return mx;
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ZeroWithinVariance || e.code() == ErrorCode::InvalidArgument)
                return std::nan("");
            throw;
        }
    }

    void save_checkpoint(double wall_so_far) const {
        binio::Writer w(cfg_.checkpoint_path);
        w.raw(kCkptMagic, sizeof kCkptMagic);
        w.u32(kCkptVersion);
        w.u32(kEndianSentinel);
        write_target(w, target_);
        write_kernel_config(w, cfg_.kernel);
        w.u64(cfg_.chains);
        w.u64(cfg_.intervals_per_batch);
        w.u64(cfg_.max_batches);
        write_opt_f64(w, cfg_.stop.cov_tol);
        write_opt_f64(w, cfg_.stop.mean_tol);
        write_opt_f64(w, cfg_.stop.psrf_tol);
        w.u32(cfg_.stop.max_samples ? 1 : 0);
        w.u64(cfg_.stop.max_samples.value_or(0));
        write_opt_f64(w, cfg_.stop.max_wall_seconds);
        w.f64(cfg_.init_dispersion);
        w.u64(cfg_.master_seed);
        w.u32(cfg_.record_traces ? 1 : 0);
        w.u64(cfg_.trace_thin);
        w.u32(cfg_.trace_eigen_projections ? 1 : 0);
        w.u64(cfg_.trace_eigen_indices.size());
        for (std::size_t idx : cfg_.trace_eigen_indices) w.u64(idx);
        w.str(cfg_.checkpoint_path);
        w.u64(cfg_.threads);

        w.u64(batches_done_);
        w.u64(global_.batches);
        w.u64(global_.count);
        w.vec(global_.mean);
        w.mat(global_.second);
        w.f64(wall_so_far);
        w.vec(batch_seconds_);
        w.vec(cov_hist_);
        w.vec(mean_hist_);
        w.vec(psrf_hist_);

        w.u64(chains_.size());
        for (const Chain& c : chains_) {
            w.vec(c.state.x);
            w.f64(c.state.log_pi);
            w.f64(c.state.quad);
            w.f64(c.state.beta);
            w.u64(c.state.n);
            w.u64(c.state.n_accepted);
            write_lower(w, c.state.factor);
            w.u32(c.state.factor_inv ? 1 : 0);
            if (c.state.factor_inv) write_lower(w, *c.state.factor_inv);
            w.vec(c.state.x_ref);
            w.u64(c.state.noise_ctr_at_batch);
            w.u64(c.uniform_rng.draw_count());
            write_accumulator(w, c.state.batch_acc);
            write_accumulator(w, c.state.cum_acc);
            w.vec(c.beta_hist);
            w.vec(c.acc_hist);
            w.u64(c.traces.size());
            for (const Vector& tr : c.traces) w.vec(tr);
        }
        w.close();
    }

    RunResult build_result(const std::string& reason) {
        RunResult res;
        res.target_kind = target_kind_name(target_.kind);
        res.kernel_name = kernel_kind_name(cfg_.kernel.kind);
        res.dim = target_.dim;
        res.chains = cfg_.chains;
        res.intervals_per_batch = cfg_.intervals_per_batch;
        res.n_lag = cfg_.kernel.n_lag;
        res.master_seed = cfg_.master_seed;
        res.total_samples = iterations_total();
        res.batches = batches_done_;
        res.wall_seconds = wall_accum_;
        res.batch_seconds = batch_seconds_;
        res.stop_reason = reason;
        res.accumulated_samples = global_.count;
        res.global_mean = global_.mean;
        res.global_cov = covariance(global_);
        res.final_cov_error = cov_hist_.empty() ? std::nan("") : cov_hist_.back();
        res.final_mean_error = mean_hist_.empty() ? std::nan("") : mean_hist_.back();
        res.final_max_psrf = psrf_hist_.empty() ? std::nan("") : psrf_hist_.back();
        res.cov_error_history = cov_hist_;
        res.mean_error_history = mean_hist_;
        res.psrf_history = psrf_hist_;
        for (const Chain& c : chains_) {
            res.beta_history.push_back(c.beta_hist);
            res.acceptance_history.push_back(c.acc_hist);
        }
        res.functional_names = functional_names_;
        for (Chain& c : chains_) res.traces.push_back(std::move(c.traces));
        return res;
    }

    Target target_;
    RunConfig cfg_;
    GlobalMoments global_;
    std::vector<Chain> chains_;
    std::vector<std::string> functional_names_;
    std::vector<Vector> projections_;
    std::size_t batches_done_ = 0;
    double wall_accum_ = 0.0;
    std::vector<double> batch_seconds_;
    std::vector<double> cov_hist_;
    std::vector<double> mean_hist_;
    std::vector<double> psrf_hist_;
};

}  // namespace

void validate_run_config(const RunConfig& cfg, const Target& target) {
    const KernelConfig& k = cfg.kernel;
    require(k.dim == target.dim, ErrorCode::DimensionMismatch,
            "kernel dimension does not match the target");
    require(cfg.chains >= 1, ErrorCode::InvalidArgument, "need at least one chain");
    require(cfg.intervals_per_batch >= 1, ErrorCode::InvalidArgument, "M must be positive");
    require(k.n_lag >= 1, ErrorCode::InvalidArgument, "n_lag must be positive");
    require(k.beta_init > 0.0 && k.beta_init <= k.beta_max, ErrorCode::InvalidArgument,
            "beta_init must lie in (0, beta_max]");
    require(k.band_lo > 0.0 && k.band_lo < k.band_hi && k.band_hi < 1.0,
            ErrorCode::InvalidArgument, "acceptance band must satisfy 0 < lo < hi < 1");
    require(k.inflation >= 1.0, ErrorCode::InvalidArgument, "inflation must be >= 1");
    require(cfg.init_dispersion > 0.0, ErrorCode::InvalidArgument, "dispersion must be positive");
    require(cfg.trace_thin >= 1, ErrorCode::InvalidArgument, "trace thinning must be >= 1");
    if (cfg.stop.psrf_tol)
        require(cfg.chains >= 2, ErrorCode::InvalidArgument,
                "the PSRF stopping rule needs at least 2 chains");
    if (k.proposal_cov)
        require(k.proposal_cov->rows == k.dim && k.proposal_cov->cols == k.dim,
                ErrorCode::DimensionMismatch, "proposal covariance has the wrong shape");
    if (k.ref_mode == RefMode::Fixed)
        require(k.fixed_ref.size() == k.dim, ErrorCode::DimensionMismatch,
                "fixed reference point has the wrong dimension");
    for (std::size_t idx : cfg.trace_eigen_indices)
        require(idx >= 1 && idx <= target.dim, ErrorCode::InvalidArgument,
                "eigen trace index out of range");
}

RunResult run_single_chain(const Target& target, const RunConfig& cfg) {
    require(cfg.chains == 1, ErrorCode::InvalidArgument, "run_single_chain requires chains == 1");
    Engine engine(target, cfg);
    return engine.run(/*inline_threads=*/true);
}

RunResult run_concurrent(const Target& target, const RunConfig& cfg) {
    Engine engine(target, cfg);
    return engine.run(/*inline_threads=*/false);
}

RunResult resume_run(const std::string& checkpoint_path,
                     const std::optional<StoppingRule>& stop_override,
                     std::optional<std::size_t> max_batches_override) {
    binio::Reader r(checkpoint_path);
    Engine engine(r);
    if (stop_override) engine.override_stop(*stop_override);
    if (max_batches_override) engine.override_max_batches(*max_batches_override);
    return engine.run(/*inline_threads=*/false);
}

RngStream make_chain_stream(std::uint64_t master_seed, std::uint64_t chain_index,
                            std::string_view purpose) {
    return make_rng_stream(master_seed, chain_index, purpose);
}

}  // namespace diam
