#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdformer/data.hpp"
#include "tdformer/model.hpp"
#include "tdformer/training.hpp"

namespace tdf {

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct SeedRun {
    std::uint64_t seed = 0;
    Metrics test;
    std::size_t best_epoch = 0;
    std::vector<EpochRecord> curve;
};

struct VariantResult {
    std::string name;
    nlohmann::json config;
    std::vector<SeedRun> runs;
    double mean_mse = 0.0;
    double std_mse = 0.0;  // sample standard deviation, 0 for a single seed
    double mean_mae = 0.0;
    double std_mae = 0.0;
    std::string skipped;  // non-empty when the variant could not run

    void summarize();
};

struct ExperimentReport {
    std::string name;
    nlohmann::json config;
    std::vector<std::uint64_t> seeds;
    std::vector<VariantResult> variants;
    nlohmann::json extra = nlohmann::json::object();
    std::vector<std::string> artifacts;
    double wall_seconds = 0.0;

    const VariantResult& variant(const std::string& name) const;
    nlohmann::json to_json(bool include_wall_clock = true) const;
};

/// Sample mean and standard deviation (n − 1 denominator).
std::pair<double, double> mean_std(const std::vector<double>& values);

/// Rows = metric (mse, mae with mean/std), columns = variants.
void write_table_csv(const ExperimentReport& report, const std::string& path);
void write_json(const nlohmann::json& j, const std::string& path);

// ---------------------------------------------------------------------------
// Linear equivalence check
// ---------------------------------------------------------------------------

struct EquivCase {
    std::size_t length = 0;
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    double time_fourier = 0.0;
    double time_wavelet = 0.0;
    double fourier_wavelet = 0.0;
    double max_deviation = 0.0;
    bool wavelet_skipped = false;
    std::string note;
};

struct EquivSettings {
    std::vector<std::size_t> lengths{6, 8, 16, 64};
    std::vector<std::size_t> dims{1, 4};
    std::size_t draws = 20;
    std::uint64_t seed = 0;
    Activation activation = Activation::identity();
    std::size_t wavelet_levels = 3;
    double tolerance = 1e-9;
};

struct EquivResult {
    std::vector<EquivCase> cases;
    double max_deviation = 0.0;
    bool equivalent = true;  // every deviation within tolerance
    nlohmann::json to_json() const;
};

EquivResult run_equiv_check(const EquivSettings& settings);

// ---------------------------------------------------------------------------
// Synthetic studies
// ---------------------------------------------------------------------------

/// Desk-scale settings shared by the synthetic studies.
struct StudySettings {
    std::size_t context = 64;
    std::size_t horizon = 64;
    std::size_t series_length = 1024;
    double period = 16.0;
    double amplitude = 1.0;
    std::size_t block_length = 96;  // varying-seasonality block
    double spike_probability = 0.02;
    double spike_magnitude = 5.0;  // multiple of the amplitude
    double trend_slope = 0.01;
    double trend_intercept = 0.0;
    std::size_t train_windows = 128;  // evenly spaced subset of the train split
    std::size_t val_windows = 32;
    std::size_t test_windows = 64;
    std::vector<std::size_t> curve_sizes{16, 64, 128};
    std::vector<int> poly_degrees{1, 2, 4, 8};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    ModelConfig model = default_study_model();
    TrainConfig train = default_study_train();

    static ModelConfig default_study_model();
    static TrainConfig default_study_train();
    nlohmann::json to_json() const;
};

StudySettings study_settings_from_json(const nlohmann::json& j);

struct Variant {
    std::string name;
    ModelConfig config;
};

/// Builds the series used for one seed.
using SeriesMaker = std::function<RealMatrix(std::uint64_t seed)>;

/// Windows `series`, splits 7:2:1 and thins each split to the configured
/// number of evenly spaced windows.
DataSplit study_split(const RealMatrix& series, const StudySettings& s, std::size_t train_windows);

/// Trains every variant for every seed on the split of that seed's series.
std::vector<VariantResult> run_variants(const std::vector<Variant>& variants,
                                        const SeriesMaker& make_series, const StudySettings& s,
                                        std::size_t train_windows);

/// Pure attention baseline: the raw context goes straight into the
/// encoder/decoder branch, with no decomposition or RevIN.
Variant attention_variant(const StudySettings& s, AttentionDomain domain, Activation act,
                          std::string name);
/// Pure MLP baseline: RevIN → MLP → RevIN⁻¹ on the raw context.
Variant mlp_variant(const StudySettings& s, std::string name = "mlp");

/// name ∈ {sin, vary, trend, spike, poly}; unknown names are a config error.
ExperimentReport run_synth(const std::string& name, const StudySettings& s);

/// Shortcut series makers, exposed for tests and the CLI.
RealMatrix study_series(const std::string& name, const StudySettings& s, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Decomposition diagnostics and ablations
// ---------------------------------------------------------------------------

struct DecomposeOutput {
    StlResult components;
    std::vector<double> strength_per_channel;
    double strength = 0.0;
};

DecomposeOutput run_decompose(const Dataset& dataset, std::size_t period);
/// Columns: timestamp, then trend/seasonal/remainder for each channel.
void write_components_csv(const Dataset& dataset, const DecomposeOutput& out, const std::string& path);

struct AblationSettings {
    std::size_t max_rows = 10000;
    std::vector<std::size_t> horizons{96};
    std::size_t context = 96;
    std::size_t train_windows = 256;
    std::size_t val_windows = 64;
    std::size_t test_windows = 128;
    std::size_t stride = 1;
    bool standardize = false;
    std::vector<std::uint64_t> seeds{0, 1, 2};
    ModelConfig model = StudySettings::default_study_model();
    TrainConfig train = StudySettings::default_study_train();
    nlohmann::json to_json() const;
};

/// The full model plus the four ablations: seasonal time attention,
/// seasonal wavelet attention, time-attention trend branch, and no RevIN.
std::vector<Variant> ablation_variants(const ModelConfig& base);

ExperimentReport run_ablate(const Dataset& dataset, const AblationSettings& s);

/// Same windowing/thinning rules as ablations, for a single model.
ExperimentReport run_train(const Dataset& dataset, const ModelConfig& model,
                           const TrainConfig& train, const AblationSettings& s,
                           TDformerParams* best_params = nullptr);

/// Seasonal series with a slow drift, used where a real benchmark file is
/// not available.
Dataset synthetic_seasonal_dataset(std::size_t rows, std::uint64_t seed);

}  // namespace tdf
