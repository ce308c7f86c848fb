#include "diam/diam.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "diam/diagnostics.hpp"
#include "diam/fit.hpp"
#include "diam/runner.hpp"
#include "diam/target.hpp"

struct diam_target {
    diam::Target impl;
};

struct diam_result {
    diam::RunResult impl;
};

namespace {

thread_local std::string g_last_error;

diam_status map_code(diam::ErrorCode code) {
    using diam::ErrorCode;
    switch (code) {
        case ErrorCode::InvalidArgument: return DIAM_ERR_INVALID_ARGUMENT;
        case ErrorCode::InvalidDimension: return DIAM_ERR_INVALID_DIMENSION;
        case ErrorCode::DimensionMismatch: return DIAM_ERR_DIMENSION_MISMATCH;
        case ErrorCode::NotPositiveDefinite: return DIAM_ERR_NOT_POSITIVE_DEFINITE;
        case ErrorCode::SingularDiagonal: return DIAM_ERR_SINGULAR_DIAGONAL;
        case ErrorCode::ConvergenceFailure: return DIAM_ERR_CONVERGENCE_FAILURE;
        case ErrorCode::DegenerateTrace: return DIAM_ERR_DEGENERATE_TRACE;
        case ErrorCode::ZeroWithinVariance: return DIAM_ERR_ZERO_WITHIN_VARIANCE;
        case ErrorCode::UnequalBatchSizes: return DIAM_ERR_UNEQUAL_BATCH_SIZES;
        case ErrorCode::Io: return DIAM_ERR_IO;
    }
    return DIAM_ERR_UNKNOWN;
}

template <typename F>
diam_status wrap(F&& body) noexcept {
    try {
        body();
        g_last_error.clear();
        return DIAM_OK;
    } catch (const diam::Error& e) {
        g_last_error = e.what();
        return map_code(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return DIAM_ERR_UNKNOWN;
    } catch (...) {
        g_last_error = "unknown failure";
        return DIAM_ERR_UNKNOWN;
    }
}

diam_status copy_out(const std::vector<double>& src, double* out, int64_t capacity) {
    return wrap([&] {
        diam::require(out != nullptr, diam::ErrorCode::InvalidArgument, "null output buffer");
        diam::require(capacity >= static_cast<int64_t>(src.size()),
                      diam::ErrorCode::InvalidArgument, "output buffer too small");
        std::memcpy(out, src.data(), src.size() * sizeof(double));
    });
}

diam::RunConfig to_run_config(const diam::Target& target, const diam_run_options& o) {
    using namespace diam;
    require(o.kernel != nullptr, ErrorCode::InvalidArgument, "kernel name is required");
    KernelConfig k = KernelConfig::defaults(kernel_kind_from_name(o.kernel), target.dim);
    if (o.beta_init > 0.0) k.beta_init = o.beta_init;
    if (o.inflation >= 1.0) k.inflation = o.inflation;
    if (o.band_lo > 0.0) k.band_lo = o.band_lo;
    if (o.band_hi > 0.0) k.band_hi = o.band_hi;
    if (o.n_lag > 0) k.n_lag = static_cast<std::size_t>(o.n_lag);
    if (o.n0 >= 0) k.n0 = static_cast<std::uint64_t>(o.n0);
    if (o.n_ref_start >= 0) k.n_ref_start = static_cast<std::uint64_t>(o.n_ref_start);
    k.ref_mode = o.adaptive_ref ? RefMode::AdaptiveMean : RefMode::Zero;
    k.use_explicit_inverse = o.use_explicit_inverse != 0;
    k.adapt_beta = o.adapt_beta != 0;

    RunConfig cfg;
    cfg.kernel = std::move(k);
    cfg.chains = o.chains >= 1 ? static_cast<std::size_t>(o.chains) : 1;
    cfg.intervals_per_batch =
        o.intervals_per_batch >= 1 ? static_cast<std::size_t>(o.intervals_per_batch) : 1;
    cfg.max_batches = o.max_batches >= 0 ? static_cast<std::size_t>(o.max_batches) : 0;
    if (o.cov_tol > 0.0) cfg.stop.cov_tol = o.cov_tol;
    if (o.mean_tol > 0.0) cfg.stop.mean_tol = o.mean_tol;
    if (o.psrf_tol > 0.0) cfg.stop.psrf_tol = o.psrf_tol;
    if (o.max_samples >= 0) cfg.stop.max_samples = static_cast<std::uint64_t>(o.max_samples);
    if (o.max_wall_seconds > 0.0) cfg.stop.max_wall_seconds = o.max_wall_seconds;
    cfg.init_dispersion = o.init_dispersion > 0.0 ? o.init_dispersion : 1.0;
    cfg.master_seed = o.master_seed;
    cfg.record_traces = o.record_traces != 0;
    cfg.trace_thin = o.trace_thin >= 1 ? static_cast<std::size_t>(o.trace_thin) : 1;
    cfg.trace_eigen_projections = o.trace_eigen_projections != 0;
    if (o.checkpoint_path != nullptr) cfg.checkpoint_path = o.checkpoint_path;
    cfg.threads = o.threads >= 0 ? static_cast<std::size_t>(o.threads) : 0;
    return cfg;
}

}  // namespace

extern "C" {

const char* diam_status_string(diam_status status) {
    switch (status) {
        case DIAM_OK: return "ok";
        case DIAM_ERR_INVALID_ARGUMENT: return "invalid argument";
        case DIAM_ERR_INVALID_DIMENSION: return "invalid dimension";
        case DIAM_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
        case DIAM_ERR_NOT_POSITIVE_DEFINITE: return "not positive definite";
        case DIAM_ERR_SINGULAR_DIAGONAL: return "singular diagonal";
        case DIAM_ERR_CONVERGENCE_FAILURE: return "convergence failure";
        case DIAM_ERR_DEGENERATE_TRACE: return "degenerate trace";
        case DIAM_ERR_ZERO_WITHIN_VARIANCE: return "zero within-chain variance";
        case DIAM_ERR_UNEQUAL_BATCH_SIZES: return "unequal batch sizes";
        case DIAM_ERR_IO: return "io error";
        case DIAM_ERR_UNKNOWN: break;
    }
    return "unknown error";
}

const char* diam_last_error(void) { return g_last_error.c_str(); }

diam_status diam_target_build(const char* kind, int64_t dim, uint64_t seed, double sigma2,
                              double twist_b, diam_target** out) {
    return wrap([&] {
        diam::require(kind != nullptr && out != nullptr, diam::ErrorCode::InvalidArgument,
                      "null argument");
        diam::require(dim >= 0, diam::ErrorCode::InvalidDimension, "negative dimension");
        auto t = std::make_unique<diam_target>();
        t->impl = diam::build_target(diam::target_kind_from_name(kind),
                                     static_cast<std::size_t>(dim), seed, sigma2, twist_b);
        *out = t.release();
    });
}

diam_status diam_target_save(const diam_target* target, const char* path) {
    return wrap([&] {
        diam::require(target != nullptr && path != nullptr, diam::ErrorCode::InvalidArgument,
                      "null argument");
        diam::target_save(target->impl, path);
    });
}

diam_status diam_target_load(const char* path, diam_target** out) {
    return wrap([&] {
        diam::require(path != nullptr && out != nullptr, diam::ErrorCode::InvalidArgument,
                      "null argument");
        auto t = std::make_unique<diam_target>();
        t->impl = diam::target_load(path);
        *out = t.release();
    });
}

void diam_target_free(diam_target* target) { delete target; }

int64_t diam_target_dim(const diam_target* target) {
    return target ? static_cast<int64_t>(target->impl.dim) : 0;
}

uint64_t diam_target_seed(const diam_target* target) { return target ? target->impl.seed : 0; }

const char* diam_target_kind(const diam_target* target) {
    return target ? diam::target_kind_name(target->impl.kind) : "?";
}

diam_status diam_target_log_density(const diam_target* target, const double* x, int64_t dim,
                                    double* out) {
    return wrap([&] {
        diam::require(target && x && out, diam::ErrorCode::InvalidArgument, "null argument");
        *out = target->impl.log_density(
            std::span<const double>(x, static_cast<std::size_t>(dim)));
    });
}

diam_status diam_target_condition_number(const diam_target* target, double* out) {
    return wrap([&] {
        diam::require(target && out, diam::ErrorCode::InvalidArgument, "null argument");
        *out = target->impl.condition_number();
    });
}

diam_status diam_target_eigen_range(const diam_target* target, double* min_out, double* max_out) {
    return wrap([&] {
        diam::require(target && min_out && max_out, diam::ErrorCode::InvalidArgument,
                      "null argument");
        *min_out = target->impl.eigvals.front();
        *max_out = target->impl.eigvals.back();
    });
}

diam_status diam_target_analytic_mean(const diam_target* target, double* out, int64_t capacity) {
    if (!target) return DIAM_ERR_INVALID_ARGUMENT;
    return copy_out(target->impl.mean, out, capacity);
}

diam_status diam_target_analytic_cov(const diam_target* target, double* out, int64_t capacity) {
    if (!target) return DIAM_ERR_INVALID_ARGUMENT;
    return copy_out(target->impl.covariance.a, out, capacity);
}

void diam_run_options_init(diam_run_options* options) {
    if (!options) return;
    std::memset(options, 0, sizeof *options);
    options->kernel = "diam";
    options->beta_init = -1.0;
    options->inflation = -1.0;
    options->band_lo = -1.0;
    options->band_hi = -1.0;
    options->n_lag = -1;
    options->n0 = -1;
    options->n_ref_start = -1;
    options->adapt_beta = 1;
    options->chains = 1;
    options->intervals_per_batch = 1;
    options->max_batches = 1000;
    options->cov_tol = -1.0;
    options->mean_tol = -1.0;
    options->psrf_tol = -1.0;
    options->max_samples = -1;
    options->max_wall_seconds = -1.0;
    options->init_dispersion = 1.0;
    options->record_traces = 1;
    options->trace_thin = 1;
    options->trace_eigen_projections = 1;
}

diam_status diam_sample(const diam_target* target, const diam_run_options* options,
                        diam_result** out) {
    return wrap([&] {
        diam::require(target && options && out, diam::ErrorCode::InvalidArgument,
                      "null argument");
        const diam::RunConfig cfg = to_run_config(target->impl, *options);
        auto res = std::make_unique<diam_result>();
        res->impl = cfg.chains == 1 && cfg.threads == 1
                        ? diam::run_single_chain(target->impl, cfg)
                        : diam::run_concurrent(target->impl, cfg);
        *out = res.release();
    });
}

diam_status diam_resume(const char* checkpoint_path, const diam_run_options* overrides,
                        diam_result** out) {
    return wrap([&] {
        diam::require(checkpoint_path && out, diam::ErrorCode::InvalidArgument, "null argument");
        std::optional<diam::StoppingRule> stop;
        std::optional<std::size_t> max_batches;
        if (overrides) {
            diam::StoppingRule rule;
            if (overrides->cov_tol > 0.0) rule.cov_tol = overrides->cov_tol;
            if (overrides->mean_tol > 0.0) rule.mean_tol = overrides->mean_tol;
            if (overrides->psrf_tol > 0.0) rule.psrf_tol = overrides->psrf_tol;
            if (overrides->max_samples >= 0)
                rule.max_samples = static_cast<std::uint64_t>(overrides->max_samples);
            if (overrides->max_wall_seconds > 0.0)
                rule.max_wall_seconds = overrides->max_wall_seconds;
            stop = rule;
            if (overrides->max_batches >= 0)
                max_batches = static_cast<std::size_t>(overrides->max_batches);
        }
        auto res = std::make_unique<diam_result>();
        res->impl = diam::resume_run(checkpoint_path, stop, max_batches);
        *out = res.release();
    });
}

void diam_result_free(diam_result* result) { delete result; }

uint64_t diam_result_total_samples(const diam_result* result) {
    return result ? result->impl.total_samples : 0;
}

uint64_t diam_result_accumulated_samples(const diam_result* result) {
    return result ? result->impl.accumulated_samples : 0;
}

int64_t diam_result_batches(const diam_result* result) {
    return result ? static_cast<int64_t>(result->impl.batches) : 0;
}

int64_t diam_result_chains(const diam_result* result) {
    return result ? static_cast<int64_t>(result->impl.chains) : 0;
}

int64_t diam_result_dim(const diam_result* result) {
    return result ? static_cast<int64_t>(result->impl.dim) : 0;
}

double diam_result_wall_seconds(const diam_result* result) {
    return result ? result->impl.wall_seconds : 0.0;
}

const char* diam_result_stop_reason(const diam_result* result) {
    return result ? result->impl.stop_reason.c_str() : "";
}

double diam_result_final_cov_error(const diam_result* result) {
    return result ? result->impl.final_cov_error : 0.0;
}

double diam_result_final_mean_error(const diam_result* result) {
    return result ? result->impl.final_mean_error : 0.0;
}

double diam_result_final_max_psrf(const diam_result* result) {
    return result ? result->impl.final_max_psrf : 0.0;
}

diam_status diam_result_write_json(const diam_result* result, const char* path) {
    return wrap([&] {
        diam::require(result && path, diam::ErrorCode::InvalidArgument, "null argument");
        std::ofstream out(path);
        diam::require(out.good(), diam::ErrorCode::Io, std::string("cannot open: ") + path);
        out << diam::run_result_to_json(result->impl);
        diam::require(out.good(), diam::ErrorCode::Io, std::string("write failed: ") + path);
    });
}

diam_status diam_result_copy_mean(const diam_result* result, double* out, int64_t capacity) {
    if (!result) return DIAM_ERR_INVALID_ARGUMENT;
    return copy_out(result->impl.global_mean, out, capacity);
}

diam_status diam_result_copy_cov(const diam_result* result, double* out, int64_t capacity) {
    if (!result) return DIAM_ERR_INVALID_ARGUMENT;
    return copy_out(result->impl.global_cov.a, out, capacity);
}

diam_status diam_result_copy_history(const diam_result* result, const char* which, double* out,
                                     int64_t capacity) {
    if (!result || !which) return DIAM_ERR_INVALID_ARGUMENT;
    const std::string name(which);
    const std::vector<double>* src = nullptr;
    if (name == "psrf") src = &result->impl.psrf_history;
    else if (name == "cov_error") src = &result->impl.cov_error_history;
    else if (name == "mean_error") src = &result->impl.mean_error_history;
    else if (name == "batch_seconds") src = &result->impl.batch_seconds;
    if (!src) {
        g_last_error = "unknown history: " + name;
        return DIAM_ERR_INVALID_ARGUMENT;
    }
    return copy_out(*src, out, capacity);
}

int64_t diam_result_lag_boundaries(const diam_result* result, int64_t chain) {
    if (!result || chain < 0 || chain >= static_cast<int64_t>(result->impl.beta_history.size()))
        return -1;
    return static_cast<int64_t>(result->impl.beta_history[chain].size());
}

diam_status diam_result_copy_chain_history(const diam_result* result, int64_t chain,
                                           const char* which, double* out, int64_t capacity) {
    if (!result || !which || chain < 0 ||
        chain >= static_cast<int64_t>(result->impl.beta_history.size()))
        return DIAM_ERR_INVALID_ARGUMENT;
    const std::string name(which);
    const std::vector<double>* src = nullptr;
    if (name == "beta") src = &result->impl.beta_history[chain];
    else if (name == "acceptance") src = &result->impl.acceptance_history[chain];
    if (!src) {
        g_last_error = "unknown chain history: " + name;
        return DIAM_ERR_INVALID_ARGUMENT;
    }
    return copy_out(*src, out, capacity);
}

int64_t diam_result_num_functionals(const diam_result* result) {
    return result ? static_cast<int64_t>(result->impl.functional_names.size()) : 0;
}

const char* diam_result_functional_name(const diam_result* result, int64_t functional) {
    if (!result || functional < 0 ||
        functional >= static_cast<int64_t>(result->impl.functional_names.size()))
        return "";
    return result->impl.functional_names[functional].c_str();
}

int64_t diam_result_trace_length(const diam_result* result, int64_t chain, int64_t functional) {
    if (!result || chain < 0 || chain >= static_cast<int64_t>(result->impl.traces.size()))
        return -1;
    const auto& per_chain = result->impl.traces[chain];
    if (functional < 0 || functional >= static_cast<int64_t>(per_chain.size())) return -1;
    return static_cast<int64_t>(per_chain[functional].size());
}

diam_status diam_result_copy_trace(const diam_result* result, int64_t chain, int64_t functional,
                                   double* out, int64_t capacity) {
    if (diam_result_trace_length(result, chain, functional) < 0)
        return DIAM_ERR_INVALID_ARGUMENT;
    return copy_out(result->impl.traces[chain][functional], out, capacity);
}

diam_status diam_acf(const double* trace, int64_t n, int64_t max_lag, double* rho_out) {
    return wrap([&] {
        diam::require(trace && rho_out && n >= 0 && max_lag >= 0,
                      diam::ErrorCode::InvalidArgument, "bad acf arguments");
        const diam::Vector rho = diam::acf(
            std::span<const double>(trace, static_cast<std::size_t>(n)),
            static_cast<std::size_t>(max_lag));
        std::memcpy(rho_out, rho.data(), rho.size() * sizeof(double));
    });
}

diam_status diam_iact(const double* trace, int64_t n, double* out) {
    return wrap([&] {
        diam::require(trace && out && n >= 0, diam::ErrorCode::InvalidArgument,
                      "bad iact arguments");
        *out = diam::iact(std::span<const double>(trace, static_cast<std::size_t>(n)));
    });
}

diam_status diam_ess(const double* trace, int64_t n, double* out) {
    return wrap([&] {
        diam::require(trace && out && n >= 0, diam::ErrorCode::InvalidArgument,
                      "bad ess arguments");
        *out = diam::ess(std::span<const double>(trace, static_cast<std::size_t>(n)));
    });
}

diam_status diam_fit_quadratic(const double* xs, const double* ys, int64_t n, double coeffs[3],
                               double* quad_share, double* rss) {
    return wrap([&] {
        diam::require(xs && ys && coeffs && n >= 0, diam::ErrorCode::InvalidArgument,
                      "bad fit arguments");
        const diam::QuadraticFit fit =
            diam::fit_quadratic(std::span<const double>(xs, static_cast<std::size_t>(n)),
                                std::span<const double>(ys, static_cast<std::size_t>(n)));
        for (int i = 0; i < 3; ++i) coeffs[i] = fit.coeffs[i];
        if (quad_share) *quad_share = fit.quad_share;
        if (rss) *rss = fit.rss;
    });
}

}  // extern "C"
