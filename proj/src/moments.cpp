#include "diam/moments.hpp"

namespace diam {

void MomentAccumulator::accumulate(std::span<const double> x) {
    require(x.size() == dim, ErrorCode::DimensionMismatch, "accumulate: sample size mismatch");
    const double n = static_cast<double>(count);
    const double keep = n / (n + 1.0);
    const double add = 1.0 / (n + 1.0);
    for (std::size_t i = 0; i < dim; ++i) mean[i] = mean[i] * keep + x[i] * add;
    for (std::size_t i = 0; i < dim; ++i) {
        const double xi = x[i] * add;
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = second(i, j) * keep + xi * x[j];
            second(i, j) = v;
            second(j, i) = v;
        }
    }
    ++count;
}

void MomentAccumulator::reset() {
    count = 0;
    std::fill(mean.begin(), mean.end(), 0.0);
    std::fill(second.a.begin(), second.a.end(), 0.0);
}

BlendedMoments blend_local_global(const MomentAccumulator& local, const GlobalMoments& global) {
    require(local.dim == global.dim, ErrorCode::DimensionMismatch, "blend: dimension mismatch");
    BlendedMoments out;
    out.count = local.count + global.count;
    if (out.count == 0) {
        out.mean = local.mean;
        out.second = local.second;
        out.cov = covariance(out.second, out.mean);
        return out;
    }
    const double total = static_cast<double>(out.count);
    const double wg = static_cast<double>(global.count) / total;
    const double wl = static_cast<double>(local.count) / total;
    const std::size_t d = local.dim;
    out.mean.resize(d);
    out.second = Matrix(d, d);
    for (std::size_t i = 0; i < d; ++i) out.mean[i] = wg * global.mean[i] + wl * local.mean[i];
    for (std::size_t i = 0; i < d * d; ++i)
        out.second.a[i] = wg * global.second.a[i] + wl * local.second.a[i];
    out.cov = covariance(out.second, out.mean);
    return out;
}

void merge_batch(GlobalMoments& global, std::span<const MomentAccumulator> locals) {
    require(!locals.empty(), ErrorCode::InvalidArgument, "merge_batch: no chains");
    const std::uint64_t per_chain = locals.front().count;
    for (const auto& acc : locals) {
        require(acc.dim == global.dim, ErrorCode::DimensionMismatch, "merge_batch: dimension mismatch");
        require(acc.count == per_chain, ErrorCode::UnequalBatchSizes,
                "merge_batch: chains hold unequal sample counts");
    }
    ++global.batches;
    const std::uint64_t incoming = per_chain * locals.size();
    if (incoming == 0) return;

    const double total = static_cast<double>(global.count + incoming);
    const double keep = static_cast<double>(global.count) / total;
    const double wp = static_cast<double>(per_chain) / total;
    const std::size_t d = global.dim;

    for (std::size_t i = 0; i < d; ++i) global.mean[i] *= keep;
    for (std::size_t i = 0; i < d * d; ++i) global.second.a[i] *= keep;
    for (const auto& acc : locals) {
        for (std::size_t i = 0; i < d; ++i) global.mean[i] += wp * acc.mean[i];
        for (std::size_t i = 0; i < d * d; ++i) global.second.a[i] += wp * acc.second.a[i];
    }
    global.count += incoming;
}

void merge_into(MomentAccumulator& into, const MomentAccumulator& from) {
    require(into.dim == from.dim, ErrorCode::DimensionMismatch, "merge_into: dimension mismatch");
    if (from.count == 0) return;
    const double total = static_cast<double>(into.count + from.count);
    const double keep = static_cast<double>(into.count) / total;
    const double add = static_cast<double>(from.count) / total;
    for (std::size_t i = 0; i < into.dim; ++i)
        into.mean[i] = keep * into.mean[i] + add * from.mean[i];
    for (std::size_t i = 0; i < into.dim * into.dim; ++i)
        into.second.a[i] = keep * into.second.a[i] + add * from.second.a[i];
    into.count += from.count;
}

Matrix covariance(const Matrix& second, std::span<const double> mean) {
    require(second.rows == mean.size(), ErrorCode::DimensionMismatch, "covariance: size mismatch");
    const std::size_t d = second.rows;
    Matrix cov(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = 0.5 * (second(i, j) + second(j, i)) - mean[i] * mean[j];
            cov(i, j) = v;
            cov(j, i) = v;
        }
    return cov;
}

Matrix covariance(const MomentAccumulator& acc) { return covariance(acc.second, acc.mean); }

Matrix covariance(const GlobalMoments& g) { return covariance(g.second, g.mean); }

}  // namespace diam
