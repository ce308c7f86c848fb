// Benchmark front end for the diam sampling library. All library access goes
// through the C API in diam/diam.h.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error,
//             3 run stopped at a cap without converging.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "diam/diam.h"
#include "json.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitNotConverged = 3;

int exit_code_for(diam_status status) {
    switch (status) {
        case DIAM_OK:
            return kExitOk;
        case DIAM_ERR_INVALID_ARGUMENT:
        case DIAM_ERR_INVALID_DIMENSION:
        case DIAM_ERR_DIMENSION_MISMATCH:
            return kExitConfig;
        default:
            return kExitRuntime;
    }
}

[[nodiscard]] int report_failure(const char* what, diam_status status) {
    std::fprintf(stderr, "error: %s: %s (%s)\n", what, diam_status_string(status),
                 diam_last_error());
    return exit_code_for(status);
}

struct TargetHandle {
    diam_target* t = nullptr;
    ~TargetHandle() { diam_target_free(t); }
};

struct ResultHandle {
    diam_result* r = nullptr;
    ~ResultHandle() { diam_result_free(r); }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct TargetSpec {
    std::string name = "pi1";  // pi1..pi6 or a path to a target file
    std::int64_t dim = 100;
    std::uint64_t seed = 1;
    double sigma2 = -1.0;
    double twist_b = -1.0;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--target", name, "Target kind (pi1..pi6) or path to a target file");
        cmd->add_option("--dim", dim, "Target dimension (generated targets)");
        cmd->add_option("--target-seed", seed, "Generation seed (generated targets)");
        cmd->add_option("--sigma2", sigma2, "pi4 data variance (default 1/d)");
        cmd->add_option("--twist-b", twist_b, "pi5/pi6 twist magnitude");
    }

    int build(TargetHandle& out) const {
        const bool is_kind = name.rfind("pi", 0) == 0 && name.size() == 3;
        const diam_status st =
            is_kind ? diam_target_build(name.c_str(), dim, seed, sigma2, twist_b, &out.t)
                    : diam_target_load(name.c_str(), &out.t);
        if (st != DIAM_OK) return report_failure("building target", st);
        return kExitOk;
    }
};

struct SampleOptions {
    TargetSpec target;
    std::string kernel = "diam";
    double beta = -1.0, inflation = -1.0, band_lo = -1.0, band_hi = -1.0;
    std::int64_t n_lag = -1, n0 = -1, n_ref_start = -1;
    bool adaptive_ref = false, explicit_inverse = false, no_adapt_beta = false;
    std::int64_t chains = 1, intervals = 10, max_batches = 1000;
    std::vector<std::string> stop_rules;
    std::int64_t max_samples = -1;
    double max_wall = -1.0;
    std::uint64_t seed = 0;
    double dispersion = 1.0;
    std::int64_t thin = 1;
    bool no_traces = false;
    std::int64_t threads = 0;
    std::string out_dir = "diam_out";
    std::string checkpoint;
    std::string resume;
    CLI::Option* opt_max_batches = nullptr;
    CLI::Option* opt_stop = nullptr;
    CLI::Option* opt_max_samples = nullptr;
    CLI::Option* opt_max_wall = nullptr;

    void add_options(CLI::App* cmd) {
        target.add_options(cmd);
        cmd->add_option("--kernel", kernel, "Proposal kernel: rw | pcn | am | diam")
            ->check(CLI::IsMember({"rw", "pcn", "am", "diam"}));
        cmd->add_option("--beta", beta, "Initial step size (default min(2.4/sqrt(d), 0.5))");
        cmd->add_option("--inflation", inflation, "DIAM noise inflation >= 1");
        cmd->add_option("--band-lo", band_lo, "Acceptance band lower edge");
        cmd->add_option("--band-hi", band_hi, "Acceptance band upper edge");
        cmd->add_option("--n-lag", n_lag, "Iterations between proposal updates (default d/2)");
        cmd->add_option("--n0", n0, "Burn-in iterations (default 5d)");
        cmd->add_option("--n-ref-start", n_ref_start, "First iteration for an adaptive pivot");
        cmd->add_flag("--adaptive-ref", adaptive_ref, "Adapt the reference point to the mean");
        cmd->add_flag("--explicit-inverse", explicit_inverse,
                      "Precompute the factor inverse instead of solving");
        cmd->add_flag("--no-adapt-beta", no_adapt_beta, "Freeze the step size");
        cmd->add_option("--chains", chains, "Number of concurrent chains P");
        cmd->add_option("--intervals", intervals, "Lag intervals per batch M");
        opt_max_batches = cmd->add_option("--max-batches", max_batches, "Batch cap K");
        opt_stop = cmd->add_option("--stop", stop_rules,
                                   "Stopping rule kind:value, repeatable; kinds cov, mean, psrf");
        opt_max_samples = cmd->add_option("--max-samples", max_samples, "Total sample cap");
        opt_max_wall = cmd->add_option("--max-wall", max_wall, "Wall-clock cap in seconds");
        cmd->add_option("--seed", seed, "Master seed for all chain streams");
        cmd->add_option("--dispersion", dispersion, "Initial-state dispersion scale");
        cmd->add_option("--thin", thin, "Trace thinning stride");
        cmd->add_flag("--no-traces", no_traces, "Do not record functional traces");
        cmd->add_option("--threads", threads, "Worker threads (0: DIAM_THREADS or cores)");
        cmd->add_option("--out-dir", out_dir, "Output directory");
        cmd->add_option("--checkpoint", checkpoint, "Checkpoint file (default out-dir/run.ckpt)");
        cmd->add_option("--resume", resume, "Resume from a checkpoint instead of starting");
    }

    int fill(diam_run_options& o) const {
        diam_run_options_init(&o);
        o.kernel = kernel.c_str();
        o.beta_init = beta;
        o.inflation = inflation;
        o.band_lo = band_lo;
        o.band_hi = band_hi;
        o.n_lag = n_lag;
        o.n0 = n0;
        o.n_ref_start = n_ref_start;
        o.adaptive_ref = adaptive_ref ? 1 : 0;
        o.use_explicit_inverse = explicit_inverse ? 1 : 0;
        o.adapt_beta = no_adapt_beta ? 0 : 1;
        o.chains = chains;
        o.intervals_per_batch = intervals;
        o.max_batches = max_batches;
        for (const std::string& rule : stop_rules) {
            const auto colon = rule.find(':');
            const std::string kind = rule.substr(0, colon);
            // bare "cov"/"mean" pick the standard tolerances 0.001 and 0.01
            const bool has_value = colon != std::string::npos;
            if (kind == "cov") o.cov_tol = has_value ? std::atof(rule.c_str() + colon + 1) : 0.001;
            else if (kind == "mean")
                o.mean_tol = has_value ? std::atof(rule.c_str() + colon + 1) : 0.01;
            else if (kind == "psrf" && has_value) o.psrf_tol = std::atof(rule.c_str() + colon + 1);
            else {
                std::fprintf(stderr, "error: bad --stop rule '%s'\n", rule.c_str());
                return kExitConfig;
            }
        }
        o.max_samples = max_samples;
        o.max_wall_seconds = max_wall;
        o.master_seed = seed;
        o.init_dispersion = dispersion;
        o.record_traces = no_traces ? 0 : 1;
        o.trace_thin = thin;
        o.threads = threads;
        return kExitOk;
    }
};

int write_trace_csvs(const diam_result* r, const std::string& dir) {
    const std::int64_t chains = diam_result_chains(r);
    const std::int64_t nf = diam_result_num_functionals(r);
    for (std::int64_t p = 0; p < chains; ++p) {
        std::vector<std::vector<double>> cols(nf);
        std::int64_t len = 0;
        for (std::int64_t f = 0; f < nf; ++f) {
            len = diam_result_trace_length(r, p, f);
            if (len <= 0) break;
            cols[f].resize(len);
            if (diam_status st = diam_result_copy_trace(r, p, f, cols[f].data(), len);
                st != DIAM_OK)
                return report_failure("reading traces", st);
        }
        if (len <= 0) continue;
        std::ofstream out(dir + "/trace_chain" + std::to_string(p) + ".csv");
        out << "index";
        for (std::int64_t f = 0; f < nf; ++f) out << ',' << diam_result_functional_name(r, f);
        out << '\n';
        for (std::int64_t i = 0; i < len; ++i) {
            out << i;
            for (std::int64_t f = 0; f < nf; ++f) out << ',' << fmt(cols[f][i]);
            out << '\n';
        }
        if (!out.good()) {
            std::fprintf(stderr, "error: writing traces under %s failed\n", dir.c_str());
            return kExitRuntime;
        }
    }
    return kExitOk;
}

int write_cov_csv(const diam_result* r, const std::string& path) {
    const std::int64_t d = diam_result_dim(r);
    std::vector<double> cov(static_cast<std::size_t>(d) * d);
    if (diam_status st = diam_result_copy_cov(r, cov.data(), d * d); st != DIAM_OK)
        return report_failure("reading covariance", st);
    std::ofstream out(path);
    for (std::int64_t i = 0; i < d; ++i) {
        for (std::int64_t j = 0; j < d; ++j) out << (j ? "," : "") << fmt(cov[i * d + j]);
        out << '\n';
    }
    return out.good() ? kExitOk : kExitRuntime;
}

int emit_run_outputs(const diam_result* r, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    if (diam_status st = diam_result_write_json(r, (out_dir + "/run.json").c_str());
        st != DIAM_OK)
        return report_failure("writing run.json", st);
    if (int rc = write_trace_csvs(r, out_dir); rc != kExitOk) return rc;
    if (int rc = write_cov_csv(r, out_dir + "/cov.csv"); rc != kExitOk) return rc;
    return kExitOk;
}

int finish_sample(const diam_result* r, const std::string& out_dir) {
    if (int rc = emit_run_outputs(r, out_dir); rc != kExitOk) return rc;
    const std::string reason = diam_result_stop_reason(r);
    std::printf("stop_reason=%s batches=%" PRId64 " total_samples=%" PRIu64
                " wall_seconds=%.3f\n",
                reason.c_str(), diam_result_batches(r), diam_result_total_samples(r),
                diam_result_wall_seconds(r));
    const double cov_err = diam_result_final_cov_error(r);
    const double mean_err = diam_result_final_mean_error(r);
    const double max_psrf = diam_result_final_max_psrf(r);
    if (std::isfinite(cov_err)) std::printf("cov_error=%.6g\n", cov_err);
    if (std::isfinite(mean_err)) std::printf("mean_error=%.6g\n", mean_err);
    if (std::isfinite(max_psrf)) std::printf("max_psrf=%.6g\n", max_psrf);
    const bool converged = reason == "cov_tol" || reason == "mean_tol" || reason == "psrf";
    return converged ? kExitOk : kExitNotConverged;
}

int cmd_generate_target(const TargetSpec& spec, const std::string& out_path) {
    TargetHandle h;
    if (int rc = spec.build(h); rc != kExitOk) return rc;
    if (diam_status st = diam_target_save(h.t, out_path.c_str()); st != DIAM_OK)
        return report_failure("saving target", st);
    double cond = 0.0, lo = 0.0, hi = 0.0;
    diam_target_condition_number(h.t, &cond);
    diam_target_eigen_range(h.t, &lo, &hi);
    std::printf("kind=%s dim=%" PRId64 " seed=%" PRIu64 "\n", diam_target_kind(h.t),
                diam_target_dim(h.t), diam_target_seed(h.t));
    std::printf("condition_number=%.6g eig_min=%.6g eig_max=%.6g\n", cond, lo, hi);
    std::printf("written=%s\n", out_path.c_str());
    return kExitOk;
}

int cmd_sample(const SampleOptions& opts) {
    ResultHandle res;
    if (!opts.resume.empty()) {
        // only override the saved rules when the user asked for new ones
        const bool any_override = opts.opt_stop->count() > 0 || opts.opt_max_samples->count() > 0 ||
                                  opts.opt_max_wall->count() > 0 ||
                                  opts.opt_max_batches->count() > 0;
        diam_run_options overrides;
        if (int rc = opts.fill(overrides); rc != kExitOk) return rc;
        if (opts.opt_max_batches->count() == 0) overrides.max_batches = -1;
        if (diam_status st = diam_resume(opts.resume.c_str(), any_override ? &overrides : nullptr,
                                         &res.r);
            st != DIAM_OK)
            return report_failure("resuming run", st);
        return finish_sample(res.r, opts.out_dir);
    }
    TargetHandle target;
    if (int rc = opts.target.build(target); rc != kExitOk) return rc;
    diam_run_options o;
    if (int rc = opts.fill(o); rc != kExitOk) return rc;
    std::filesystem::create_directories(opts.out_dir);
    const std::string ckpt = opts.checkpoint.empty() ? opts.out_dir + "/run.ckpt" : opts.checkpoint;
    o.checkpoint_path = ckpt.c_str();
    if (diam_status st = diam_sample(target.t, &o, &res.r); st != DIAM_OK)
        return report_failure("sampling", st);
    return finish_sample(res.r, opts.out_dir);
}

struct TraceFile {
    std::string label;
    std::vector<std::string> columns;             // functional names
    std::vector<std::vector<double>> values;      // per column
};

bool read_trace_csv(const std::string& path, TraceFile& out) {
    std::ifstream in(path);
    if (!in.good()) return false;
    out.label = std::filesystem::path(path).stem().string();
    std::string line;
    if (!std::getline(in, line)) return false;
    std::stringstream header(line);
    std::string cell;
    bool first = true;
    while (std::getline(header, cell, ',')) {
        if (first) {
            first = false;  // index column
            continue;
        }
        out.columns.push_back(cell);
    }
    out.values.assign(out.columns.size(), {});
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::size_t col = 0;
        bool lead = true;
        while (std::getline(row, cell, ',')) {
            if (lead) {
                lead = false;
                continue;
            }
            if (col < out.values.size()) out.values[col].push_back(std::atof(cell.c_str()));
            ++col;
        }
    }
    return !out.columns.empty();
}

int cmd_diagnose(const std::vector<std::string>& trace_paths, const std::string& run_json,
                 std::int64_t max_lag, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<TraceFile> files;
    for (const std::string& path : trace_paths) {
        TraceFile tf;
        if (!read_trace_csv(path, tf)) {
            std::fprintf(stderr, "error: cannot read trace file %s\n", path.c_str());
            return kExitRuntime;
        }
        files.push_back(std::move(tf));
    }

    // one ACF table per functional, a column per input trace
    std::map<std::string, std::vector<const TraceFile*>> by_functional;
    for (const TraceFile& tf : files)
        for (const std::string& fn : tf.columns) by_functional[fn].push_back(&tf);

    std::ofstream table(out_dir + "/iact_ess.csv");
    table << "label,functional,n,iact,ess\n";
    for (const auto& [fn, sources] : by_functional) {
        std::ofstream acf_out(out_dir + "/acf_" + fn + ".csv");
        acf_out << "lag";
        std::vector<std::vector<double>> rhos;
        std::int64_t lag_count = max_lag;
        for (const TraceFile* tf : sources) {
            const std::size_t col =
                std::find(tf->columns.begin(), tf->columns.end(), fn) - tf->columns.begin();
            const std::vector<double>& trace = tf->values[col];
            const std::int64_t usable =
                std::min<std::int64_t>(max_lag, static_cast<std::int64_t>(trace.size()) / 2 - 1);
            lag_count = std::min(lag_count, usable);
            if (usable < 1) {
                std::fprintf(stderr, "error: trace %s.%s too short for max-lag\n",
                             tf->label.c_str(), fn.c_str());
                return kExitRuntime;
            }
            std::vector<double> rho(static_cast<std::size_t>(max_lag) + 1);
            if (diam_status st =
                    diam_acf(trace.data(), static_cast<std::int64_t>(trace.size()), usable,
                             rho.data());
                st != DIAM_OK)
                return report_failure("computing acf", st);
            rho.resize(static_cast<std::size_t>(usable) + 1);
            rhos.push_back(std::move(rho));
            acf_out << ",rho_" << tf->label;

            double tau = 0.0, n_eff = 0.0;
            if (diam_status st =
                    diam_iact(trace.data(), static_cast<std::int64_t>(trace.size()), &tau);
                st != DIAM_OK)
                return report_failure("computing iact", st);
            if (diam_status st =
                    diam_ess(trace.data(), static_cast<std::int64_t>(trace.size()), &n_eff);
                st != DIAM_OK)
                return report_failure("computing ess", st);
            table << tf->label << ',' << fn << ',' << trace.size() << ',' << fmt(tau) << ','
                  << fmt(n_eff) << '\n';
        }
        acf_out << '\n';
        for (std::int64_t lag = 0; lag <= lag_count; ++lag) {
            acf_out << lag;
            for (const auto& rho : rhos) acf_out << ',' << fmt(rho[lag]);
            acf_out << '\n';
        }
    }

    if (!run_json.empty()) {
        std::ifstream in(run_json);
        if (!in.good()) {
            std::fprintf(stderr, "error: cannot read %s\n", run_json.c_str());
            return kExitRuntime;
        }
        nlohmann::json j;
        in >> j;
        std::ofstream psrf_out(out_dir + "/psrf.csv");
        psrf_out << "batch,max_psrf\n";
        std::size_t batch = 1;
        for (const auto& v : j["psrf_history"]) {
            psrf_out << batch++ << ',' << (v.is_null() ? "nan" : fmt(v.get<double>())) << '\n';
        }
    }
    std::printf("diagnostics written to %s\n", out_dir.c_str());
    return kExitOk;
}

int cmd_benchmark(const SampleOptions& base, const std::vector<std::int64_t>& dims,
                  const std::vector<std::int64_t>& chain_sweep, std::int64_t samples,
                  const std::string& out_path) {
    if (dims.empty() && chain_sweep.empty()) {
        std::fprintf(stderr, "error: benchmark needs --dims or --chain-sweep\n");
        return kExitConfig;
    }
    std::ofstream out(out_path);
    if (!out.good()) {
        std::fprintf(stderr, "error: cannot open %s\n", out_path.c_str());
        return kExitRuntime;
    }

    if (!dims.empty()) {
        out << "d,total_samples,wall_seconds,sec_per_sample,sec_per_batch\n";
        std::vector<double> xs, ys;
        for (std::int64_t d : dims) {
            TargetSpec spec = base.target;
            spec.dim = d;
            TargetHandle target;
            if (int rc = spec.build(target); rc != kExitOk) return rc;

            diam_run_options o;
            if (int rc = base.fill(o); rc != kExitOk) return rc;
            o.record_traces = 0;
            o.checkpoint_path = nullptr;
            o.cov_tol = o.mean_tol = o.psrf_tol = -1.0;
            const std::int64_t n_lag = o.n_lag > 0 ? o.n_lag : std::max<std::int64_t>(1, d / 2);
            const std::int64_t per_batch = o.chains * o.intervals_per_batch * n_lag;
            o.max_batches = std::max<std::int64_t>(1, (samples + per_batch - 1) / per_batch);
            o.max_samples = -1;
            o.n0 = o.n0 >= 0 ? o.n0 : 0;

            ResultHandle res;
            if (diam_status st = diam_sample(target.t, &o, &res.r); st != DIAM_OK)
                return report_failure("benchmark run", st);
            const double wall = diam_result_wall_seconds(res.r);
            const auto total = static_cast<double>(diam_result_total_samples(res.r));
            const auto batches = static_cast<double>(diam_result_batches(res.r));
            out << d << ',' << static_cast<std::uint64_t>(total) << ',' << fmt(wall) << ','
                << fmt(wall / total) << ',' << fmt(wall / batches) << '\n';
            xs.push_back(static_cast<double>(d));
            ys.push_back(wall / total);
        }
        if (xs.size() >= 3) {
            double coeffs[3], share = 0.0, rss = 0.0;
            if (diam_status st = diam_fit_quadratic(xs.data(), ys.data(),
                                                    static_cast<std::int64_t>(xs.size()), coeffs,
                                                    &share, &rss);
                st != DIAM_OK)
                return report_failure("fitting scaling curve", st);
            std::printf("per-sample seconds fit: T = %.6g + %.6g*d + %.6g*d^2\n", coeffs[0],
                        coeffs[1], coeffs[2]);
            std::printf("quadratic variance share = %.3f, rss = %.6g\n", share, rss);
        }
    }

    if (!chain_sweep.empty()) {
        out << "P,total_seconds,sec_per_batch,N\n";
        for (std::int64_t p : chain_sweep) {
            TargetHandle target;
            if (int rc = base.target.build(target); rc != kExitOk) return rc;
            diam_run_options o;
            if (int rc = base.fill(o); rc != kExitOk) return rc;
            o.record_traces = 0;
            o.checkpoint_path = nullptr;
            o.chains = p;
            ResultHandle res;
            if (diam_status st = diam_sample(target.t, &o, &res.r); st != DIAM_OK)
                return report_failure("benchmark run", st);
            const double wall = diam_result_wall_seconds(res.r);
            const auto batches = static_cast<double>(diam_result_batches(res.r));
            out << p << ',' << fmt(wall) << ',' << fmt(batches > 0 ? wall / batches : 0.0) << ','
                << diam_result_total_samples(res.r) << '\n';
        }
    }
    std::printf("benchmark table written to %s\n", out_path.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DIAM adaptive Metropolis sampler benchmark"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Key-value config file; flags override file values");
    app.allow_config_extras(false);

    // generate-target
    auto* gen = app.add_subcommand("generate-target", "Build and store a synthetic target");
    TargetSpec gen_spec;
    gen_spec.add_options(gen);
    std::string gen_out = "target.bin";
    gen->add_option("--out", gen_out, "Output file");

    // sample
    auto* sample = app.add_subcommand("sample", "Run the sampler");
    SampleOptions sample_opts;
    sample_opts.add_options(sample);

    // diagnose
    auto* diag = app.add_subcommand("diagnose", "ACF/IACT/ESS and PSRF reports from run outputs");
    std::vector<std::string> diag_traces;
    std::string diag_run, diag_out = "diam_diag";
    std::int64_t diag_max_lag = 200;
    diag->add_option("--trace", diag_traces, "Trace CSV produced by sample (repeatable)");
    diag->add_option("--run", diag_run, "run.json produced by sample (for the PSRF series)");
    diag->add_option("--max-lag", diag_max_lag, "Largest ACF lag");
    diag->add_option("--out-dir", diag_out, "Output directory");

    // benchmark
    auto* bench = app.add_subcommand("benchmark", "Dimension and chain-count scaling sweeps");
    SampleOptions bench_opts;
    bench_opts.add_options(bench);
    std::vector<std::int64_t> bench_dims, bench_chain_sweep;
    std::int64_t bench_samples = 20000;
    std::string bench_out = "benchmark.csv";
    bench->add_option("--dims", bench_dims, "Dimension sweep, e.g. --dims 100 200 400");
    bench->add_option("--chain-sweep", bench_chain_sweep, "Chain-count sweep, e.g. 1 2 4");
    bench->add_option("--samples", bench_samples, "Samples per dimension-sweep point");
    bench->add_option("--out", bench_out, "Output CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (gen->parsed()) return cmd_generate_target(gen_spec, gen_out);
        if (sample->parsed()) return cmd_sample(sample_opts);
        if (diag->parsed()) return cmd_diagnose(diag_traces, diag_run, diag_max_lag, diag_out);
        if (bench->parsed())
            return cmd_benchmark(bench_opts, bench_dims, bench_chain_sweep, bench_samples,
                                 bench_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitConfig;
}
