/*
 * C interface to the diam sampling library.
 *
 * Opaque handles, status-code returns. On any non-OK status a thread-local
 * message with detail is available from diam_last_error(). Buffers are
 * caller-allocated; *_copy_* functions check the given capacity.
 */
#ifndef DIAM_DIAM_H
#define DIAM_DIAM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum diam_status {
    DIAM_OK = 0,
    DIAM_ERR_INVALID_ARGUMENT = 1,
    DIAM_ERR_INVALID_DIMENSION = 2,
    DIAM_ERR_DIMENSION_MISMATCH = 3,
    DIAM_ERR_NOT_POSITIVE_DEFINITE = 4,
    DIAM_ERR_SINGULAR_DIAGONAL = 5,
    DIAM_ERR_CONVERGENCE_FAILURE = 6,
    DIAM_ERR_DEGENERATE_TRACE = 7,
    DIAM_ERR_ZERO_WITHIN_VARIANCE = 8,
    DIAM_ERR_UNEQUAL_BATCH_SIZES = 9,
    DIAM_ERR_IO = 10,
    DIAM_ERR_UNKNOWN = 11
} diam_status;

const char* diam_status_string(diam_status status);
/* Message for the last failure on this thread; empty string if none. */
const char* diam_last_error(void);

/* ---- targets ---------------------------------------------------------- */

typedef struct diam_target diam_target;

/* kind: "pi1".."pi6". sigma2 <= 0 selects the pi4 default 1/d; twist_b < 0
 * selects 0.3 for pi5 and 2 for pi6. */
diam_status diam_target_build(const char* kind, int64_t dim, uint64_t seed, double sigma2,
                              double twist_b, diam_target** out);
diam_status diam_target_save(const diam_target* target, const char* path);
diam_status diam_target_load(const char* path, diam_target** out);
void diam_target_free(diam_target* target);

int64_t diam_target_dim(const diam_target* target);
uint64_t diam_target_seed(const diam_target* target);
const char* diam_target_kind(const diam_target* target);
diam_status diam_target_log_density(const diam_target* target, const double* x, int64_t dim,
                                    double* out);
diam_status diam_target_condition_number(const diam_target* target, double* out);
diam_status diam_target_eigen_range(const diam_target* target, double* min_out, double* max_out);
diam_status diam_target_analytic_mean(const diam_target* target, double* out, int64_t capacity);
/* Row-major dim×dim. */
diam_status diam_target_analytic_cov(const diam_target* target, double* out, int64_t capacity);

/* ---- sampling runs ----------------------------------------------------- */

typedef struct diam_result diam_result;

/* Every field has a sentinel meaning "use the default"; call
 * diam_run_options_init first and override what you need. */
typedef struct diam_run_options {
    const char* kernel;   /* "rw" | "pcn" | "am" | "diam" */
    double beta_init;     /* <= 0: min(2.4/sqrt(d), 0.5) */
    double inflation;     /* < 1: 1 */
    double band_lo;       /* <= 0: 0.1 (rw/am) or 0.3 (pcn/diam) */
    double band_hi;       /* <= 0: 0.3 (rw/am) or 0.5 (pcn/diam) */
    int64_t n_lag;        /* <= 0: d/2 */
    int64_t n0;           /* < 0: 5·d burn-in iterations */
    int64_t n_ref_start;  /* < 0: 10·d */
    int adaptive_ref;     /* 0: reference point fixed at zero */
    int use_explicit_inverse;
    int adapt_beta;

    int64_t chains;              /* P, >= 1 */
    int64_t intervals_per_batch; /* M, >= 1 */
    int64_t max_batches;         /* K cap */
    double cov_tol;              /* <= 0: rule disabled */
    double mean_tol;             /* <= 0: rule disabled */
    double psrf_tol;             /* <= 0: rule disabled; needs chains >= 2 */
    int64_t max_samples;         /* < 0: disabled */
    double max_wall_seconds;     /* <= 0: disabled */
    double init_dispersion;
    uint64_t master_seed;
    int record_traces;
    int64_t trace_thin;
    int trace_eigen_projections;
    const char* checkpoint_path; /* NULL: no checkpointing */
    int64_t threads;             /* 0: DIAM_THREADS env or hardware count */
} diam_run_options;

void diam_run_options_init(diam_run_options* options);

diam_status diam_sample(const diam_target* target, const diam_run_options* options,
                        diam_result** out);
/* Continue a checkpointed run. When overrides is non-NULL its stopping-rule
 * fields (cov_tol, mean_tol, psrf_tol, max_samples, max_wall_seconds) and
 * max_batches replace the saved ones; everything else is ignored. */
diam_status diam_resume(const char* checkpoint_path, const diam_run_options* overrides,
                        diam_result** out);
void diam_result_free(diam_result* result);

uint64_t diam_result_total_samples(const diam_result* result);
uint64_t diam_result_accumulated_samples(const diam_result* result);
int64_t diam_result_batches(const diam_result* result);
int64_t diam_result_chains(const diam_result* result);
int64_t diam_result_dim(const diam_result* result);
double diam_result_wall_seconds(const diam_result* result);
const char* diam_result_stop_reason(const diam_result* result);
/* NaN when the quantity was not available for the run. */
double diam_result_final_cov_error(const diam_result* result);
double diam_result_final_mean_error(const diam_result* result);
double diam_result_final_max_psrf(const diam_result* result);

diam_status diam_result_write_json(const diam_result* result, const char* path);
diam_status diam_result_copy_mean(const diam_result* result, double* out, int64_t capacity);
diam_status diam_result_copy_cov(const diam_result* result, double* out, int64_t capacity);

/* Per-batch histories: which = "psrf" | "cov_error" | "mean_error" | "batch_seconds". */
diam_status diam_result_copy_history(const diam_result* result, const char* which, double* out,
                                     int64_t capacity);
/* Per-lag-boundary chain histories: which = "beta" | "acceptance". */
int64_t diam_result_lag_boundaries(const diam_result* result, int64_t chain);
diam_status diam_result_copy_chain_history(const diam_result* result, int64_t chain,
                                           const char* which, double* out, int64_t capacity);

int64_t diam_result_num_functionals(const diam_result* result);
const char* diam_result_functional_name(const diam_result* result, int64_t functional);
int64_t diam_result_trace_length(const diam_result* result, int64_t chain, int64_t functional);
diam_status diam_result_copy_trace(const diam_result* result, int64_t chain, int64_t functional,
                                   double* out, int64_t capacity);

/* ---- diagnostics over plain traces ------------------------------------ */

/* rho_out must hold max_lag+1 values; rho_out[0] = 1. */
diam_status diam_acf(const double* trace, int64_t n, int64_t max_lag, double* rho_out);
diam_status diam_iact(const double* trace, int64_t n, double* out);
diam_status diam_ess(const double* trace, int64_t n, double* out);

/* OLS fit y ~ a + b·x + c·x². coeffs = {a, b, c}; quad_share is the variance
 * share of the fitted quadratic component; rss the residual sum of squares. */
diam_status diam_fit_quadratic(const double* xs, const double* ys, int64_t n, double coeffs[3],
                               double* quad_share, double* rss);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DIAM_DIAM_H */
