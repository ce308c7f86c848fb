#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "diam/diagnostics.hpp"
#include "diam/proposal.hpp"
#include "diam/target.hpp"

namespace diam {

/// Stopping rules compose with OR semantics, checked at batch boundaries.
/// cov_tol / mean_tol compare against the target's analytic moments;
/// psrf_tol is a threshold on max_i sqrt(R_i) and needs at least two chains.
struct StoppingRule {
    std::optional<double> cov_tol;
    std::optional<double> mean_tol;
    std::optional<double> psrf_tol;
    std::optional<std::uint64_t> max_samples;
    std::optional<double> max_wall_seconds;
};

struct RunConfig {
    KernelConfig kernel;
    std::size_t chains = 1;             // P
    std::size_t intervals_per_batch = 1;  // M
    std::size_t max_batches = 100;      // K cap
    StoppingRule stop;
    double init_dispersion = 1.0;  // x0 = dispersion · N(0, I)
    std::uint64_t master_seed = 0;
    bool record_traces = true;
    std::size_t trace_thin = 1;
    bool trace_eigen_projections = true;
    std::vector<std::size_t> trace_eigen_indices;  // extra 1-based eigen directions
    std::string checkpoint_path;  // empty disables checkpointing
    std::size_t threads = 0;      // 0: DIAM_THREADS env or hardware count
};

struct RunResult {
    std::string target_kind;
    std::string kernel_name;
    std::size_t dim = 0;
    std::size_t chains = 0;
    std::size_t intervals_per_batch = 0;
    std::size_t n_lag = 0;
    std::uint64_t master_seed = 0;

    std::uint64_t total_samples = 0;  // P·M·K·n_lag
    std::size_t batches = 0;          // K
    double wall_seconds = 0.0;
    std::vector<double> batch_seconds;
    std::string stop_reason;  // cov_tol | mean_tol | psrf | max_samples | batch_cap | wall_time

    std::uint64_t accumulated_samples = 0;  // post-burn-in samples behind the moments
    Vector global_mean;
    Matrix global_cov;
    double final_cov_error = 0.0;   // NaN when unavailable
    double final_mean_error = 0.0;  // NaN when unavailable
    double final_max_psrf = 0.0;    // NaN when unavailable
    std::vector<double> cov_error_history;
    std::vector<double> mean_error_history;
    std::vector<double> psrf_history;  // max_i sqrt(R_i) per batch

    std::vector<std::vector<double>> beta_history;        // [chain][lag boundary]
    std::vector<std::vector<double>> acceptance_history;  // [chain][lag boundary]

    std::vector<std::string> functional_names;
    std::vector<std::vector<Vector>> traces;  // [chain][functional]
};

void validate_run_config(const RunConfig& cfg, const Target& target);

/// One chain, inline on the calling thread. Requires cfg.chains == 1.
RunResult run_single_chain(const Target& target, const RunConfig& cfg);

/// P chains over a worker pool with a full barrier per batch. Deterministic
/// for a given (master_seed, P, config) regardless of the thread count.
RunResult run_concurrent(const Target& target, const RunConfig& cfg);

/// Continue a checkpointed run until its stopping rules fire again. The
/// optional overrides replace the saved stopping rules / batch cap, which is
/// how a run stopped at a cap gets a larger budget.
RunResult resume_run(const std::string& checkpoint_path,
                     const std::optional<StoppingRule>& stop_override = {},
                     std::optional<std::size_t> max_batches_override = {});

/// Deterministic streams per (chain, purpose); see RngStream.
RngStream make_chain_stream(std::uint64_t master_seed, std::uint64_t chain_index,
                            std::string_view purpose);

/// JSON report for a finished run (schema in docs/result.schema.json).
std::string run_result_to_json(const RunResult& result);

}  // namespace diam
