#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tdformer/matrix.hpp"

namespace tdf {

struct DecompResult {
    RealMatrix trend;
    RealMatrix seasonal;
};

struct StlResult {
    RealMatrix trend;
    RealMatrix seasonal;
    RealMatrix remainder;
};

/// Linear map from each time step's channel vector to one logit per kernel.
struct KernelMixer {
    RealMatrix weight;  // D × K
    RealMatrix bias;    // 1 × K
};

/// Centered moving average with replicate (edge-value) padding. `kernel` must
/// be odd and no longer than the series.
RealMatrix moving_average(const RealMatrix& x, std::size_t kernel);

/// Centered weighted moving average with replicate padding; `weights` must
/// have odd length. Shared by the plain and STL trend filters.
RealMatrix weighted_moving_average(const RealMatrix& x, std::span<const double> weights);

/// Splits `x` into trend and seasonal = x − trend. The trend is refit as
/// x − seasonal so the sum reproduces the input exactly wherever IEEE
/// arithmetic permits it (always when |trend| <= |x|).
DecompResult split_trend(const RealMatrix& x, const RealMatrix& trend);

/// Per-time-step softmax over the mixer logits weights the per-kernel moving
/// averages into a single trend.
DecompResult multi_kernel_decomp(const RealMatrix& x, std::span<const std::size_t> kernels,
                                 const KernelMixer& mixer);

/// Classical decomposition: centered moving-average trend (2×period average for
/// even periods), per-phase mean seasonal, remainder.
StlResult stl_decompose(const RealMatrix& x, std::size_t period);

/// max(0, 1 − Var(R)/(Var(S)+Var(R))) per channel.
std::vector<double> seasonality_strength_per_channel(const RealMatrix& x, std::size_t period);

/// Mean of the per-channel strengths.
double seasonality_strength(const RealMatrix& x, std::size_t period);

}  // namespace tdf
