#include <cmath>

#include "diam/diagnostics.hpp"
#include "diam/runner.hpp"
#include "json.hpp"

namespace diam {

namespace {

nlohmann::json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

}  // namespace

std::string run_result_to_json(const RunResult& result) {
    nlohmann::json j;
    j["schema"] = "diam-run-result/1";
    j["target_kind"] = result.target_kind;
    j["kernel"] = result.kernel_name;
    j["dim"] = result.dim;
    j["chains"] = result.chains;
    j["intervals_per_batch"] = result.intervals_per_batch;
    j["n_lag"] = result.n_lag;
    j["master_seed"] = result.master_seed;
    j["total_samples"] = result.total_samples;
    j["batches"] = result.batches;
    j["wall_seconds"] = result.wall_seconds;
    j["batch_seconds"] = result.batch_seconds;
    j["stop_reason"] = result.stop_reason;
    j["accumulated_samples"] = result.accumulated_samples;
    j["global_mean"] = result.global_mean;
    j["final_cov_error"] = finite_or_null(result.final_cov_error);
    j["final_mean_error"] = finite_or_null(result.final_mean_error);
    j["final_max_psrf"] = finite_or_null(result.final_max_psrf);

    auto history = [](const std::vector<double>& xs) {
        nlohmann::json arr = nlohmann::json::array();
        for (double v : xs) arr.push_back(finite_or_null(v));
        return arr;
    };
    j["cov_error_history"] = history(result.cov_error_history);
    j["mean_error_history"] = history(result.mean_error_history);
    j["psrf_history"] = history(result.psrf_history);
    j["beta_history"] = result.beta_history;
    j["acceptance_history"] = result.acceptance_history;
    j["functionals"] = result.functional_names;

    nlohmann::json iact_out = nlohmann::json::array();
    nlohmann::json ess_out = nlohmann::json::array();
    for (const auto& chain_traces : result.traces) {
        nlohmann::json row_i = nlohmann::json::array();
        nlohmann::json row_e = nlohmann::json::array();
        for (const auto& trace : chain_traces) {
            if (trace.size() >= 8) {
                try {
                    const double tau = iact(trace);
                    row_i.push_back(tau);
                    row_e.push_back(static_cast<double>(trace.size()) / tau);
                } catch (const Error&) {
                    row_i.push_back(nullptr);
                    row_e.push_back(nullptr);
                }
            } else {
                row_i.push_back(nullptr);
                row_e.push_back(nullptr);
            }
        }
        iact_out.push_back(row_i);
        ess_out.push_back(row_e);
    }
    j["iact"] = iact_out;
    j["ess"] = ess_out;
    return j.dump(2) + "\n";
}

}  // namespace diam
