#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "tdformer/data.hpp"
#include "tdformer/model.hpp"

namespace tdf {

struct TrainConfig {
    double lr = 1e-4;
    std::size_t batch_size = 32;
    std::size_t epochs = 100;
    std::uint64_t seed = 0;
    std::size_t patience = 10;
    /// Global-norm gradient clip; disabled when empty.
    std::optional<double> clip;

    void validate() const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

double mse(const RealMatrix& pred, const RealMatrix& target);
double mae(const RealMatrix& pred, const RealMatrix& target);

struct LossGradient {
    double loss = 0.0;
    GradientSet grads;
};

/// Mean MSE over `batch` and its exact gradient. Throws Error(numeric)
/// naming the first parameter block with a non-finite gradient.
LossGradient loss_and_gradient(const TDformerParams& params, const ModelConfig& cfg,
                               std::span<const SeriesWindow> batch);

/// Throws Error(numeric) naming the first block holding NaN or Inf.
void check_finite(const GradientSet& grads, const char* what);

double global_norm(const GradientSet& grads);

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    GradientSet m;
    GradientSet v;
    std::size_t t = 0;
};

AdamState adam_init(const TDformerParams& params);

/// One bias-corrected Adam update; `t` is the 1-based step index.
void adam_step(TDformerParams& params, const GradientSet& grads, AdamState& state, std::size_t t,
               const AdamConfig& cfg);

struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
};

Metrics evaluate(const TDformerParams& params, const ModelConfig& cfg,
                 std::span<const SeriesWindow> windows);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_mse = 0.0;
};

struct TrainResult {
    TDformerParams best_params;
    std::size_t best_epoch = 0;  // 0 means the initial parameters were kept
    double best_val_mse = 0.0;
    Metrics test;
    std::vector<EpochRecord> curve;
    bool stopped_early = false;
};

nlohmann::json to_json(const TrainResult& result);

/// Mini-batch Adam on split.train, selecting the parameters with the lowest
/// validation MSE. Empty splits are a config error.
TrainResult train(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const DataSplit& split);

}  // namespace tdf
