#include "tdformer/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "tdformer/error.hpp"

namespace tdf {

RealMatrix gen_sin(std::size_t length, double period, double amplitude, double phase) {
    if (!(period > 1.0)) {
        throw Error(ErrorKind::invalid_period, "gen_sin: period must exceed 1, got " +
                                                   std::to_string(period));
    }
    RealMatrix x(length, 1);
    for (std::size_t t = 0; t < length; ++t) {
        x(t, 0) = amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period + phase);
    }
    return x;
}

RealMatrix gen_varying_seasonal(std::size_t length, std::size_t base_period,
                                std::size_t block_length, double amplitude) {
    if (base_period < 2 || base_period % 2 != 0) {
        throw Error(ErrorKind::invalid_period, "gen_varying_seasonal: base period " +
                                                   std::to_string(base_period) +
                                                   " must be even so that half of it is integral");
    }
    if (block_length < base_period) {
        throw Error(ErrorKind::invalid_period, "gen_varying_seasonal: block length " +
                                                   std::to_string(block_length) +
                                                   " is shorter than the base period");
    }
    RealMatrix x(length, 1);
    double phase = 0.0;
    for (std::size_t start = 0, block = 0; start < length; start += block_length, ++block) {
        const double period = block % 2 == 0 ? static_cast<double>(base_period)
                                             : static_cast<double>(base_period / 2);
        const std::size_t end = std::min(length, start + block_length);
        for (std::size_t t = start; t < end; ++t) {
            x(t, 0) = amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t - start) /
                                               period +
                                           phase);
        }
        phase = std::fmod(phase + 2.0 * std::numbers::pi * static_cast<double>(end - start) / period,
                          2.0 * std::numbers::pi);
    }
    return x;
}

RealMatrix gen_linear_trend(std::size_t length, double slope, double intercept, double noise_std,
                            std::uint64_t seed) {
    RealMatrix x(length, 1);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_std > 0.0 ? noise_std : 1.0);
    for (std::size_t t = 0; t < length; ++t) {
        x(t, 0) = slope * static_cast<double>(t) + intercept;
        if (noise_std > 0.0) x(t, 0) += noise(rng);
    }
    return x;
}

RealMatrix gen_white_noise(std::size_t length, double stddev, std::uint64_t seed) {
    RealMatrix x(length, 1);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, stddev);
    for (double& v : x.values()) v = noise(rng);
    return x;
}

RealMatrix inject_spikes(const RealMatrix& series, double probability, double magnitude,
                         std::uint64_t seed, std::size_t region_end) {
    if (!(probability > 0.0 && probability < 1.0)) {
        throw Error(ErrorKind::domain, "inject_spikes: probability must lie in (0, 1)");
    }
    RealMatrix out = series;
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution hit(probability);
    const std::size_t end = std::min(region_end, series.rows());
    for (std::size_t t = 0; t < end; ++t) {
        if (hit(rng)) {
            for (std::size_t c = 0; c < series.cols(); ++c) out(t, c) += magnitude;
        }
    }
    return out;
}

Dataset make_dataset(std::string name, RealMatrix series) {
    Dataset d;
    d.name = std::move(name);
    for (std::size_t c = 0; c < series.cols(); ++c) d.channel_names.push_back("x" + std::to_string(c));
    d.timestamps.reserve(series.rows());
    for (std::size_t t = 0; t < series.rows(); ++t) d.timestamps.push_back(std::to_string(t));
    d.sampling_period = "1";
    d.series = std::move(series);
    return d;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::parse, path + ": empty file");
    const std::vector<std::string> header = split_fields(line);
    if (header.size() < 2) {
        throw Error(ErrorKind::parse, path + ": header needs a timestamp column and at least one channel");
    }
    Dataset d;
    d.name = std::filesystem::path(path).stem().string();
    for (std::size_t c = 1; c < header.size(); ++c) d.channel_names.push_back(trim(header[c]));
    const std::size_t channels = d.channel_names.size();
    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != channels + 1) {
            throw Error(ErrorKind::parse, path + ": line " + std::to_string(line_no) + " has " +
                                              std::to_string(fields.size()) + " fields, expected " +
                                              std::to_string(channels + 1));
        }
        d.timestamps.push_back(trim(fields[0]));
        for (std::size_t c = 1; c < fields.size(); ++c) {
            const std::string cell = trim(fields[c]);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() ||
                !std::isfinite(v)) {
                throw Error(ErrorKind::parse, path + ": line " + std::to_string(line_no) +
                                                  ", column " + std::to_string(c + 1) + " ('" +
                                                  header[c] + "'): not a number: '" + cell + "'");
            }
            values.push_back(v);
        }
    }
    if (d.timestamps.empty()) throw Error(ErrorKind::parse, path + ": dataset has no data rows");
    d.series = RealMatrix(d.timestamps.size(), channels, std::move(values));
    return d;
}

void save_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    out << "date";
    for (std::size_t c = 0; c < dataset.channels(); ++c) {
        out << ',' << (c < dataset.channel_names.size() ? dataset.channel_names[c] : "x" + std::to_string(c));
    }
    out << '\n';
    char buf[32];
    for (std::size_t t = 0; t < dataset.length(); ++t) {
        out << (t < dataset.timestamps.size() ? dataset.timestamps[t] : std::to_string(t));
        for (std::size_t c = 0; c < dataset.channels(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", dataset.series(t, c));
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw Error(ErrorKind::io, "failed writing '" + path + "'");
}

Dataset tail(const Dataset& dataset, std::size_t rows) {
    if (rows >= dataset.length()) return dataset;
    const std::size_t skip = dataset.length() - rows;
    Dataset d;
    d.name = dataset.name;
    d.channel_names = dataset.channel_names;
    d.sampling_period = dataset.sampling_period;
    if (dataset.timestamps.size() == dataset.length()) {
        d.timestamps.assign(dataset.timestamps.begin() + static_cast<std::ptrdiff_t>(skip),
                            dataset.timestamps.end());
    }
    d.series = RealMatrix(rows, dataset.channels());
    for (std::size_t t = 0; t < rows; ++t)
        for (std::size_t c = 0; c < dataset.channels(); ++c) d.series(t, c) = dataset.series(skip + t, c);
    return d;
}

RealMatrix standardize(const RealMatrix& series, std::size_t fit_rows) {
    fit_rows = std::min(fit_rows, series.rows());
    if (fit_rows == 0) throw Error(ErrorKind::shape, "standardize: no rows to fit statistics on");
    RealMatrix out(series.rows(), series.cols());
    for (std::size_t c = 0; c < series.cols(); ++c) {
        double mean = 0.0;
        for (std::size_t t = 0; t < fit_rows; ++t) mean += series(t, c);
        mean /= static_cast<double>(fit_rows);
        double var = 0.0;
        for (std::size_t t = 0; t < fit_rows; ++t) var += (series(t, c) - mean) * (series(t, c) - mean);
        const double sd = std::max(std::sqrt(var / static_cast<double>(fit_rows)), 1e-12);
        for (std::size_t t = 0; t < series.rows(); ++t) out(t, c) = (series(t, c) - mean) / sd;
    }
    return out;
}

std::vector<SeriesWindow> make_windows(const RealMatrix& series, std::size_t context,
                                       std::size_t horizon, std::size_t stride) {
    if (stride == 0) throw Error(ErrorKind::config, "make_windows: stride must be >= 1");
    if (context == 0 || horizon == 0) {
        throw Error(ErrorKind::config, "make_windows: context and horizon must be positive");
    }
    std::vector<SeriesWindow> out;
    const std::size_t span = context + horizon;
    const std::size_t d = series.cols();
    for (std::size_t origin = 0; origin + span <= series.rows(); origin += stride) {
        SeriesWindow w;
        w.origin = origin;
        w.context = RealMatrix(context, d);
        w.target = RealMatrix(horizon, d);
        for (std::size_t t = 0; t < context; ++t)
            for (std::size_t c = 0; c < d; ++c) w.context(t, c) = series(origin + t, c);
        for (std::size_t t = 0; t < horizon; ++t)
            for (std::size_t c = 0; c < d; ++c) w.target(t, c) = series(origin + context + t, c);
        out.push_back(std::move(w));
    }
    return out;
}

DataSplit split_711(std::vector<SeriesWindow> windows) {
    const std::size_t n = windows.size();
    const std::size_t a = n * 7 / 10;
    const std::size_t b = n * 9 / 10;
    DataSplit s;
    for (std::size_t i = 0; i < n; ++i) {
        auto& dst = i < a ? s.train : (i < b ? s.val : s.test);
        dst.push_back(std::move(windows[i]));
    }
    return s;
}

std::size_t train_region_end(std::size_t length, std::size_t context, std::size_t horizon,
                             std::size_t stride) {
    if (stride == 0 || length < context + horizon) return 0;
    const std::size_t n = (length - context - horizon) / stride + 1;
    return (n * 7 / 10) * stride;
}

}  // namespace tdf
