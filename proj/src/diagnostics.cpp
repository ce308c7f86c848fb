#include "diam/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace diam {

namespace {

constexpr double kIactCutoff = 0.05;
constexpr std::size_t kIactLagCap = 10000;

double trace_mean(std::span<const double> trace) {
    double m = 0.0;
    for (double v : trace) m += v;
    return m / static_cast<double>(trace.size());
}

double autocovariance(std::span<const double> trace, double mean, std::size_t lag) {
    const std::size_t n = trace.size();
    double c = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) c += (trace[t] - mean) * (trace[t + lag] - mean);
    return c / static_cast<double>(n);
}

double lag0_checked(std::span<const double> trace, double mean) {
    require(trace.size() >= 2, ErrorCode::DegenerateTrace, "trace too short");
    const double c0 = autocovariance(trace, mean, 0);
    // constant traces leave a rounding-level residual rather than an exact zero
    const double floor = 1e-20 * std::max(1.0, mean * mean);
    require(c0 > floor && std::isfinite(c0), ErrorCode::DegenerateTrace,
            "trace has zero variance");
    return c0;
}

}  // namespace

Vector acf(std::span<const double> trace, std::size_t max_lag) {
    require(max_lag < trace.size() / 2, ErrorCode::InvalidArgument,
            "acf: max_lag must be below half the trace length");
    const double mean = trace_mean(trace);
    const double c0 = lag0_checked(trace, mean);
    Vector rho(max_lag + 1);
    rho[0] = 1.0;
    for (std::size_t lag = 1; lag <= max_lag; ++lag)
        rho[lag] = autocovariance(trace, mean, lag) / c0;
    return rho;
}

double iact(std::span<const double> trace, std::size_t max_lag) {
    const double mean = trace_mean(trace);
    const double c0 = lag0_checked(trace, mean);
    double theta = 0.0;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        const double rho = autocovariance(trace, mean, lag) / c0;
        if (rho < kIactCutoff) break;
        theta += rho;
    }
    return 1.0 + 2.0 * theta;
}

double iact(std::span<const double> trace) {
    require(trace.size() >= 2, ErrorCode::DegenerateTrace, "trace too short");
    const std::size_t cap = std::min(trace.size() / 2 - 1, kIactLagCap);
    return iact(trace, cap);
}

double ess(std::span<const double> trace) {
    return static_cast<double>(trace.size()) / iact(trace);
}

PsrfInput make_psrf_input(std::span<const MomentAccumulator> chains) {
    require(chains.size() >= 2, ErrorCode::InvalidArgument, "psrf needs at least 2 chains");
    PsrfInput in;
    in.samples_per_chain = chains.front().count;
    const std::size_t d = chains.front().dim;
    in.global_mean.assign(d, 0.0);
    for (const auto& acc : chains) {
        require(acc.count == in.samples_per_chain, ErrorCode::UnequalBatchSizes,
                "psrf: chains hold unequal sample counts");
        in.chain_means.push_back(acc.mean);
        Vector diag(d);
        for (std::size_t i = 0; i < d; ++i) diag[i] = acc.second(i, i);
        in.chain_second_diag.push_back(std::move(diag));
    }
    const double inv_p = 1.0 / static_cast<double>(chains.size());
    for (const auto& m : in.chain_means)
        for (std::size_t i = 0; i < d; ++i) in.global_mean[i] += inv_p * m[i];
    return in;
}

Vector psrf(const PsrfInput& input) {
    const std::size_t p = input.chain_means.size();
    require(p >= 2, ErrorCode::InvalidArgument, "psrf needs at least 2 chains");
    require(input.samples_per_chain >= 2, ErrorCode::InvalidArgument,
            "psrf needs at least 2 samples per chain");
    const std::size_t d = input.global_mean.size();
    const double n = static_cast<double>(input.samples_per_chain);
    const double pd = static_cast<double>(p);

    Vector out(d);
    for (std::size_t i = 0; i < d; ++i) {
        double between = 0.0;
        double within = 0.0;
        for (std::size_t c = 0; c < p; ++c) {
            const double delta = input.chain_means[c][i] - input.global_mean[i];
            between += delta * delta;
            within += input.chain_second_diag[c][i] -
                      input.chain_means[c][i] * input.chain_means[c][i];
        }
        const double b_i = n / (pd - 1.0) * between;
        const double w_i = n / ((n - 1.0) * pd) * within;
        require(w_i > 0.0, ErrorCode::ZeroWithinVariance,
                "psrf: zero within-chain variance in direction " + std::to_string(i));
        const double r = (n - 1.0) / n + (pd + 1.0) / (pd * n) * b_i / w_i;
        out[i] = std::sqrt(r);
    }
    return out;
}

double cov_error(const Matrix& emp, const Matrix& truth) {
    require(emp.rows == truth.rows && emp.cols == truth.cols, ErrorCode::DimensionMismatch,
            "cov_error: shape mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < emp.a.size(); ++i) {
        const double diff = emp.a[i] - truth.a[i];
        num += diff * diff;
        den += truth.a[i] * truth.a[i];
    }
    require(den > 0.0, ErrorCode::InvalidArgument, "cov_error: zero reference norm");
    return std::sqrt(num / den);
}

double mean_error(std::span<const double> emp, std::span<const double> truth) {
    require(emp.size() == truth.size(), ErrorCode::DimensionMismatch, "mean_error: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < emp.size(); ++i) {
        const double diff = emp[i] - truth[i];
        s += diff * diff;
    }
    return std::sqrt(s);
}

}  // namespace diam
