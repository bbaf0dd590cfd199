#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tdformer/matrix.hpp"

namespace tdf {

/// One (context, horizon) training pair cut from a series.
struct SeriesWindow {
    RealMatrix context;  // L_c × D
    RealMatrix target;   // H × D
    std::size_t origin = 0;
};

struct Dataset {
    std::string name;
    std::vector<std::string> channel_names;
    std::vector<std::string> timestamps;  // one per row; may be empty for synthetic data
    std::string sampling_period;
    RealMatrix series;  // T × D

    std::size_t length() const { return series.rows(); }
    std::size_t channels() const { return series.cols(); }
};

// Generators. All return a T×1 column.
RealMatrix gen_sin(std::size_t length, double period, double amplitude = 1.0, double phase = 0.0);

/// Alternating blocks of period `base_period` and `base_period / 2`
/// sinusoids, phase-continuous at the joins.
RealMatrix gen_varying_seasonal(std::size_t length, std::size_t base_period,
                                std::size_t block_length, double amplitude = 1.0);

RealMatrix gen_linear_trend(std::size_t length, double slope, double intercept,
                            double noise_std = 0.0, std::uint64_t seed = 0);

RealMatrix gen_white_noise(std::size_t length, double stddev, std::uint64_t seed);

/// Adds `magnitude` to each step in [0, region_end) independently with the
/// given probability. Steps at or after region_end are left alone.
RealMatrix inject_spikes(const RealMatrix& series, double probability, double magnitude,
                         std::uint64_t seed, std::size_t region_end);

Dataset make_dataset(std::string name, RealMatrix series);

// CSV: header row, first column a timestamp string, remaining columns numeric.
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& dataset, const std::string& path);

/// Keeps the most recent `rows` rows (all of them if the dataset is shorter).
Dataset tail(const Dataset& dataset, std::size_t rows);

/// Per-channel z-score using statistics of the first `fit_rows` rows.
RealMatrix standardize(const RealMatrix& series, std::size_t fit_rows);

std::vector<SeriesWindow> make_windows(const RealMatrix& series, std::size_t context,
                                       std::size_t horizon, std::size_t stride = 1);

struct DataSplit {
    std::vector<SeriesWindow> train;
    std::vector<SeriesWindow> val;
    std::vector<SeriesWindow> test;
};

/// Chronological 7:2:1 split on window order, floor rounding at 70% and 90%.
DataSplit split_711(std::vector<SeriesWindow> windows);

/// First series index that belongs to a validation window context when the
/// series is windowed with these settings. Steps before it are training-only.
std::size_t train_region_end(std::size_t length, std::size_t context, std::size_t horizon,
                             std::size_t stride = 1);

}  // namespace tdf
