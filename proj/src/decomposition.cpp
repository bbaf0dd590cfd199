#include "tdformer/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tdformer/numerics.hpp"

namespace tdf {

namespace {

double variance(std::span<const double> v) {
    if (v.empty()) return 0.0;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(v.size());
}

std::vector<double> column(const RealMatrix& m, std::size_t c) {
    std::vector<double> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) out[r] = m(r, c);
    return out;
}

// Trend filter of the classical decomposition: a plain `period` average for
// odd periods, the 2×period average (period+1 taps, half weight at the ends)
// for even periods.
std::vector<double> trend_weights(std::size_t period) {
    if (period % 2 == 1) return std::vector<double>(period, 1.0 / static_cast<double>(period));
    std::vector<double> w(period + 1, 1.0 / static_cast<double>(period));
    w.front() = w.back() = 0.5 / static_cast<double>(period);
    return w;
}

}  // namespace

RealMatrix weighted_moving_average(const RealMatrix& x, std::span<const double> weights) {
    if (weights.size() % 2 == 0) {
        throw Error(ErrorKind::invalid_kernel, "moving average weights must have odd length");
    }
    const auto n = static_cast<std::ptrdiff_t>(x.rows());
    const auto half = static_cast<std::ptrdiff_t>(weights.size() / 2);
    RealMatrix out(x.rows(), x.cols());
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        for (std::ptrdiff_t j = -half; j <= half; ++j) {
            const std::ptrdiff_t src = std::clamp<std::ptrdiff_t>(t + j, 0, n - 1);
            const double w = weights[static_cast<std::size_t>(j + half)];
            for (std::size_t c = 0; c < x.cols(); ++c)
                out(static_cast<std::size_t>(t), c) += w * x(static_cast<std::size_t>(src), c);
        }
    }
    return out;
}

RealMatrix moving_average(const RealMatrix& x, std::size_t kernel) {
    if (kernel == 0 || kernel % 2 == 0 || kernel > x.rows()) {
        throw Error(ErrorKind::invalid_kernel,
                    "moving average kernel " + std::to_string(kernel) +
                        " must be odd and within [1, " + std::to_string(x.rows()) + "]");
    }
    if (kernel == 1) return x;
    const std::vector<double> w(kernel, 1.0 / static_cast<double>(kernel));
    return weighted_moving_average(x, w);
}

DecompResult split_trend(const RealMatrix& x, const RealMatrix& trend) {
    require_same_shape(x, trend, "split_trend");
    DecompResult out{trend, RealMatrix(x.rows(), x.cols())};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = x.values()[i] - trend.values()[i];
        out.seasonal.values()[i] = s;
        out.trend.values()[i] = x.values()[i] - s;
    }
    return out;
}

DecompResult multi_kernel_decomp(const RealMatrix& x, std::span<const std::size_t> kernels,
                                 const KernelMixer& mixer) {
    if (kernels.empty()) throw Error(ErrorKind::config, "multi_kernel_decomp: no kernels given");
    if (mixer.weight.rows() != x.cols() || mixer.weight.cols() != kernels.size() ||
        mixer.bias.rows() != 1 || mixer.bias.cols() != kernels.size()) {
        throw Error(ErrorKind::shape, "multi_kernel_decomp: mixer " +
                                          mixer.weight.shape_string() + " / " +
                                          mixer.bias.shape_string() + " does not map " +
                                          std::to_string(x.cols()) + " channels to " +
                                          std::to_string(kernels.size()) + " kernels");
    }

    RealMatrix logits = matmul(x, mixer.weight);
    for (std::size_t t = 0; t < logits.rows(); ++t)
        for (std::size_t k = 0; k < logits.cols(); ++k) logits(t, k) += mixer.bias(0, k);
    const RealMatrix weights = softmax_rows(logits);

    RealMatrix trend(x.rows(), x.cols());
    for (std::size_t k = 0; k < kernels.size(); ++k) {
        const RealMatrix avg = moving_average(x, kernels[k]);
        for (std::size_t t = 0; t < x.rows(); ++t)
            for (std::size_t c = 0; c < x.cols(); ++c) trend(t, c) += weights(t, k) * avg(t, c);
    }
    return split_trend(x, trend);
}

StlResult stl_decompose(const RealMatrix& x, std::size_t period) {
    if (period < 2 || 2 * period > x.rows()) {
        throw Error(ErrorKind::invalid_period, "period " + std::to_string(period) +
                                                   " invalid for series of length " +
                                                   std::to_string(x.rows()) +
                                                   " (need 2 <= period and 2*period <= length)");
    }
    const std::vector<double> w = trend_weights(period);
    StlResult out;
    out.trend = weighted_moving_average(x, w);
    const std::size_t half = w.size() / 2;
    out.seasonal = RealMatrix(x.rows(), x.cols());
    out.remainder = RealMatrix(x.rows(), x.cols());

    for (std::size_t c = 0; c < x.cols(); ++c) {
        std::vector<double> phase_sum(period, 0.0);
        std::vector<std::size_t> phase_count(period, 0);
        // Only samples whose filter window avoids the padded edges inform the pattern.
        for (std::size_t t = half; t + half < x.rows(); ++t) {
            phase_sum[t % period] += x(t, c) - out.trend(t, c);
            ++phase_count[t % period];
        }
        std::vector<double> phase_mean(period);
        for (std::size_t p = 0; p < period; ++p)
            phase_mean[p] = phase_sum[p] / static_cast<double>(phase_count[p]);
        const double offset =
            std::accumulate(phase_mean.begin(), phase_mean.end(), 0.0) / static_cast<double>(period);
        for (std::size_t t = 0; t < x.rows(); ++t) {
            out.seasonal(t, c) = phase_mean[t % period] - offset;
            out.remainder(t, c) = x(t, c) - out.trend(t, c) - out.seasonal(t, c);
        }
    }
    return out;
}

std::vector<double> seasonality_strength_per_channel(const RealMatrix& x, std::size_t period) {
    const StlResult parts = stl_decompose(x, period);
    std::vector<double> out(x.cols());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        const double var_s = variance(column(parts.seasonal, c));
        const double var_r = variance(column(parts.remainder, c));
        const double total = var_s + var_r;
        // Rounding noise on a constant channel must still read as degenerate, so
        // the floor is relative to the channel's mean square.
        double mean_square = 0.0;
        for (std::size_t t = 0; t < x.rows(); ++t) mean_square += x(t, c) * x(t, c);
        mean_square /= static_cast<double>(x.rows());
        out[c] = total <= 1e-20 * mean_square ? 0.0 : std::max(0.0, 1.0 - var_r / total);
    }
    return out;
}

double seasonality_strength(const RealMatrix& x, std::size_t period) {
    const auto per_channel = seasonality_strength_per_channel(x, period);
    if (per_channel.empty()) return 0.0;
    return std::accumulate(per_channel.begin(), per_channel.end(), 0.0) /
           static_cast<double>(per_channel.size());
}

}  // namespace tdf
