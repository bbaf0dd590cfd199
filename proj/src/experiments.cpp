#include "tdformer/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "tdformer/attention.hpp"
#include "tdformer/decomposition.hpp"
#include "tdformer/numerics.hpp"

namespace tdf {

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

std::pair<double, double> mean_std(const std::vector<double>& values) {
    if (values.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

void VariantResult::summarize() {
    std::vector<double> m, a;
    for (const SeedRun& r : runs) {
        m.push_back(r.test.mse);
        a.push_back(r.test.mae);
    }
    std::tie(mean_mse, std_mse) = mean_std(m);
    std::tie(mean_mae, std_mae) = mean_std(a);
}

const VariantResult& ExperimentReport::variant(const std::string& wanted) const {
    for (const VariantResult& v : variants)
        if (v.name == wanted) return v;
    throw Error(ErrorKind::config, "report '" + name + "' has no variant '" + wanted + "'");
}

nlohmann::json ExperimentReport::to_json(bool include_wall_clock) const {
    nlohmann::json vs = nlohmann::json::array();
    for (const VariantResult& v : variants) {
        nlohmann::json runs = nlohmann::json::array();
        for (const SeedRun& r : v.runs) {
            nlohmann::json curve = nlohmann::json::array();
            for (const EpochRecord& e : r.curve) {
                curve.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_mse", e.val_mse}});
            }
            runs.push_back({{"seed", r.seed},
                            {"test_mse", r.test.mse},
                            {"test_mae", r.test.mae},
                            {"best_epoch", r.best_epoch},
                            {"curve", curve}});
        }
        nlohmann::json entry{{"name", v.name},         {"config", v.config},
                             {"runs", runs},           {"mean_mse", v.mean_mse},
                             {"std_mse", v.std_mse},   {"mean_mae", v.mean_mae},
                             {"std_mae", v.std_mae}};
        if (!v.skipped.empty()) entry["skipped"] = v.skipped;
        vs.push_back(std::move(entry));
    }
    nlohmann::json j{{"experiment", name}, {"config", config}, {"seeds", seeds},
                     {"variants", vs},     {"extra", extra},   {"artifacts", artifacts}};
    if (include_wall_clock) j["wall_clock_seconds"] = wall_seconds;
    return j;
}

void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorKind::io, "failed writing '" + path + "'");
}

void write_table_csv(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    out << "metric";
    for (const VariantResult& v : report.variants) out << ',' << v.name;
    out << '\n';
    auto row = [&](const char* label, double VariantResult::*field) {
        out << label;
        char buf[32];
        for (const VariantResult& v : report.variants) {
            if (v.skipped.empty()) {
                std::snprintf(buf, sizeof buf, "%.6g", v.*field);
                out << ',' << buf;
            } else {
                out << ",";
            }
        }
        out << '\n';
    };
    row("mse_mean", &VariantResult::mean_mse);
    row("mse_std", &VariantResult::std_mse);
    row("mae_mean", &VariantResult::mean_mae);
    row("mae_std", &VariantResult::std_mae);
    if (!out) throw Error(ErrorKind::io, "failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Lemma check
// ---------------------------------------------------------------------------

nlohmann::json EquivResult::to_json() const {
    nlohmann::json cs = nlohmann::json::array();
    for (const EquivCase& c : cases) {
        nlohmann::json e{{"length", c.length},
                         {"dim", c.dim},
                         {"seed", c.seed},
                         {"time_fourier", c.time_fourier},
                         {"max_deviation", c.max_deviation}};
        if (c.wavelet_skipped) {
            e["wavelet"] = "skipped";
        } else {
            e["time_wavelet"] = c.time_wavelet;
            e["fourier_wavelet"] = c.fourier_wavelet;
        }
        if (!c.note.empty()) e["note"] = c.note;
        cs.push_back(std::move(e));
    }
    return {{"cases", cs}, {"max_deviation", max_deviation}, {"equivalent", equivalent}};
}

EquivResult run_equiv_check(const EquivSettings& settings) {
    EquivResult result;
    for (std::size_t length : settings.lengths) {
        for (std::size_t dim : settings.dims) {
            const bool wavelet_ok = is_power_of_two(length) && length >= 2;
            EquivCase worst;
            worst.length = length;
            worst.dim = dim;
            worst.wavelet_skipped = !wavelet_ok;
            if (!wavelet_ok) worst.note = "wavelet skipped: non-power-of-two length";
            for (std::size_t draw = 0; draw < settings.draws; ++draw) {
                const std::uint64_t seed = settings.seed * 1000003ULL + length * 1009ULL + dim * 31ULL + draw;
                std::mt19937_64 rng(seed);
                std::normal_distribution<double> n(0.0, 1.0);
                auto random = [&] {
                    RealMatrix m(length, dim);
                    for (double& v : m.values()) v = n(rng);
                    return m;
                };
                const RealMatrix q = random(), k = random(), v = random();
                const RealMatrix t = time_attention(q, k, v, settings.activation);
                const RealMatrix f = fourier_attention(q, k, v, settings.activation);
                EquivCase c;
                c.time_fourier = max_abs_diff(t, f);
                c.max_deviation = c.time_fourier;
                if (wavelet_ok) {
                    const std::size_t levels = std::min(settings.wavelet_levels, log2_exact(length));
                    const RealMatrix w = wavelet_attention(q, k, v, settings.activation, levels);
                    c.time_wavelet = max_abs_diff(t, w);
                    c.fourier_wavelet = max_abs_diff(f, w);
                    c.max_deviation = std::max({c.time_fourier, c.time_wavelet, c.fourier_wavelet});
                }
                if (draw == 0 || c.max_deviation > worst.max_deviation) {
                    worst.seed = seed;
                    worst.time_fourier = c.time_fourier;
                    worst.time_wavelet = c.time_wavelet;
                    worst.fourier_wavelet = c.fourier_wavelet;
                    worst.max_deviation = c.max_deviation;
                }
            }
            result.max_deviation = std::max(result.max_deviation, worst.max_deviation);
            if (!(worst.max_deviation <= settings.tolerance)) result.equivalent = false;
            result.cases.push_back(std::move(worst));
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Synthetic studies
// ---------------------------------------------------------------------------

ModelConfig StudySettings::default_study_model() {
    ModelConfig m;
    m.context = 64;
    m.horizon = 64;
    m.d_model = 16;
    m.d_ff = 32;
    m.enc_layers = 1;
    m.dec_layers = 1;
    m.positional = true;
    return m;
}

TrainConfig StudySettings::default_study_train() {
    TrainConfig t;
    t.lr = 3e-3;
    t.batch_size = 16;
    t.epochs = 60;
    t.patience = 10;
    return t;
}

nlohmann::json StudySettings::to_json() const {
    return {{"context", context},
            {"horizon", horizon},
            {"series_length", series_length},
            {"period", period},
            {"amplitude", amplitude},
            {"block_length", block_length},
            {"spike_probability", spike_probability},
            {"spike_magnitude", spike_magnitude},
            {"trend_slope", trend_slope},
            {"trend_intercept", trend_intercept},
            {"train_windows", train_windows},
            {"val_windows", val_windows},
            {"test_windows", test_windows},
            {"curve_sizes", curve_sizes},
            {"poly_degrees", poly_degrees},
            {"seeds", seeds},
            {"model", tdf::to_json(model)},
            {"train", tdf::to_json(train)}};
}

StudySettings study_settings_from_json(const nlohmann::json& j) {
    StudySettings s;
    try {
        s.context = j.value("context", s.context);
        s.horizon = j.value("horizon", s.horizon);
        s.series_length = j.value("series_length", s.series_length);
        s.period = j.value("period", s.period);
        s.amplitude = j.value("amplitude", s.amplitude);
        s.block_length = j.value("block_length", s.block_length);
        s.spike_probability = j.value("spike_probability", s.spike_probability);
        s.spike_magnitude = j.value("spike_magnitude", s.spike_magnitude);
        s.trend_slope = j.value("trend_slope", s.trend_slope);
        s.trend_intercept = j.value("trend_intercept", s.trend_intercept);
        s.train_windows = j.value("train_windows", s.train_windows);
        s.val_windows = j.value("val_windows", s.val_windows);
        s.test_windows = j.value("test_windows", s.test_windows);
        s.curve_sizes = j.value("curve_sizes", s.curve_sizes);
        s.poly_degrees = j.value("poly_degrees", s.poly_degrees);
        s.seeds = j.value("seeds", s.seeds);
        if (j.contains("model")) s.model = model_config_from_json(j.at("model"));
        if (j.contains("train")) s.train = train_config_from_json(j.at("train"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::config, std::string("study settings: ") + e.what());
    }
    s.model.context = s.context;
    s.model.horizon = s.horizon;
    return s;
}

namespace {

std::vector<SeriesWindow> thin(std::vector<SeriesWindow> windows, std::size_t keep) {
    if (keep == 0 || keep >= windows.size()) return windows;
    std::vector<SeriesWindow> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) out.push_back(std::move(windows[i * windows.size() / keep]));
    return out;
}

double elapsed_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

SeedRun train_seed(const ModelConfig& base, const TrainConfig& train_base, const DataSplit& split,
                   std::uint64_t seed, TDformerParams* best = nullptr) {
    ModelConfig cfg = base;
    cfg.seed = seed;
    TrainConfig tc = train_base;
    tc.seed = seed;
    TrainResult r = train(cfg, tc, split);
    SeedRun run;
    run.seed = seed;
    run.test = r.test;
    run.best_epoch = r.best_epoch;
    run.curve = std::move(r.curve);
    if (best) *best = std::move(r.best_params);
    return run;
}

}  // namespace

DataSplit study_split(const RealMatrix& series, const StudySettings& s, std::size_t train_windows) {
    DataSplit split = split_711(make_windows(series, s.context, s.horizon, 1));
    split.train = thin(std::move(split.train), train_windows);
    split.val = thin(std::move(split.val), s.val_windows);
    split.test = thin(std::move(split.test), s.test_windows);
    return split;
}

std::vector<VariantResult> run_variants(const std::vector<Variant>& variants,
                                        const SeriesMaker& make_series, const StudySettings& s,
                                        std::size_t train_windows) {
    std::vector<VariantResult> results(variants.size());
    for (std::size_t i = 0; i < variants.size(); ++i) {
        results[i].name = variants[i].name;
        results[i].config = to_json(variants[i].config);
    }
    for (std::uint64_t seed : s.seeds) {
        const DataSplit split = study_split(make_series(seed), s, train_windows);
        for (std::size_t i = 0; i < variants.size(); ++i)
            results[i].runs.push_back(train_seed(variants[i].config, s.train, split, seed));
    }
    for (VariantResult& r : results) r.summarize();
    return results;
}

Variant attention_variant(const StudySettings& s, AttentionDomain domain, Activation act,
                          std::string name) {
    Variant v{std::move(name), s.model};
    v.config.context = s.context;
    v.config.horizon = s.horizon;
    v.config.layout = Layout::seasonal_only;
    v.config.seasonal_domain = domain;
    v.config.seasonal_activation = act;
    v.config.validate();
    return v;
}

Variant mlp_variant(const StudySettings& s, std::string name) {
    Variant v{std::move(name), s.model};
    v.config.context = s.context;
    v.config.horizon = s.horizon;
    v.config.layout = Layout::trend_only;
    v.config.trend_branch = TrendBranch::mlp;
    v.config.revin = true;
    v.config.validate();
    return v;
}

RealMatrix study_series(const std::string& name, const StudySettings& s, std::uint64_t seed) {
    if (name == "sin" || name == "poly") return gen_sin(s.series_length, s.period, s.amplitude);
    if (name == "vary") {
        const double rounded = std::round(s.period);
        if (rounded != s.period || rounded < 2) {
            throw Error(ErrorKind::invalid_period, "varying seasonality needs an integral period");
        }
        return gen_varying_seasonal(s.series_length, static_cast<std::size_t>(rounded),
                                    s.block_length, s.amplitude);
    }
    if (name == "trend") return gen_linear_trend(s.series_length, s.trend_slope, s.trend_intercept);
    if (name == "spike") {
        const RealMatrix clean = gen_sin(s.series_length, s.period, s.amplitude);
        const std::size_t region = train_region_end(s.series_length, s.context, s.horizon, 1);
        return inject_spikes(clean, s.spike_probability, s.spike_magnitude * s.amplitude, seed, region);
    }
    throw Error(ErrorKind::config, "unknown synthetic experiment '" + name +
                                       "' (expected sin, vary, trend, spike or poly)");
}

ExperimentReport run_synth(const std::string& name, const StudySettings& s) {
    const auto start = std::chrono::steady_clock::now();
    const Activation soft = Activation::softmax();
    const AttentionDomain wavelet = AttentionDomain::wavelet(s.model.seasonal_domain.kind ==
                                                                     AttentionDomain::Kind::wavelet
                                                                 ? s.model.seasonal_domain.levels
                                                                 : 3);
    std::vector<Variant> variants;
    if (name == "trend") variants.push_back(mlp_variant(s));
    if (name == "poly") {
        for (int d : s.poly_degrees) {
            variants.push_back(attention_variant(s, AttentionDomain::fourier(), Activation::polynomial(d),
                                                 "fourier-poly" + std::to_string(d)));
        }
        variants.push_back(attention_variant(s, AttentionDomain::fourier(), soft, "fourier-softmax"));
    } else {
        (void)study_series(name, s, 0);  // rejects unknown names before any training
        variants.push_back(attention_variant(s, AttentionDomain::time(), soft, "time"));
        variants.push_back(attention_variant(s, AttentionDomain::fourier(), soft, "fourier"));
        variants.push_back(attention_variant(s, wavelet, soft, "wavelet"));
    }
    const SeriesMaker maker = [&](std::uint64_t seed) { return study_series(name, s, seed); };

    ExperimentReport report;
    report.name = "synth-" + name;
    report.config = s.to_json();
    report.seeds = s.seeds;
    report.variants = run_variants(variants, maker, s, s.train_windows);

    nlohmann::json checks = nlohmann::json::object();
    if (name == "sin" || name == "vary") {
        nlohmann::json curve = nlohmann::json::array();
        for (std::size_t size : s.curve_sizes) {
            const std::vector<VariantResult> at =
                size == s.train_windows ? report.variants : run_variants(variants, maker, s, size);
            nlohmann::json row{{"train_windows", size}};
            for (const VariantResult& v : at) row[v.name] = v.mean_mse;
            const double t = row["time"], f = row["fourier"], w = row["wavelet"];
            row["ordering_holds"] = name == "sin" ? f <= t : w <= f && w <= t;
            curve.push_back(std::move(row));
        }
        report.extra["sample_efficiency"] = curve;
        const double t = report.variant("time").mean_mse;
        const double f = report.variant("fourier").mean_mse;
        const double w = report.variant("wavelet").mean_mse;
        if (name == "sin") checks["fourier_le_time"] = f <= t;
        if (name == "vary") checks["wavelet_le_fourier_and_time"] = w <= f && w <= t;
    } else if (name == "trend") {
        const double mlp = report.variant("mlp").mean_mse;
        bool below = true;
        double min_ratio = INFINITY;
        for (const VariantResult& v : report.variants) {
            if (v.name == "mlp") continue;
            below = below && mlp < v.mean_mse;
            min_ratio = std::min(min_ratio, v.mean_mse / std::max(mlp, 1e-300));
        }
        checks["mlp_mse_le_1e-2"] = mlp <= 1e-2;
        checks["mlp_below_every_attention"] = below;
        checks["min_attention_to_mlp_ratio"] = min_ratio;
    } else if (name == "spike") {
        const double t = report.variant("time").mean_mse;
        const double f = report.variant("fourier").mean_mse;
        const double w = report.variant("wavelet").mean_mse;
        checks["fourier_lt_wavelet_lt_time"] = f < w && w < t;
        checks["fourier_lt_time"] = f < t;
        checks["time_over_fourier"] = t / std::max(f, 1e-300);
        std::size_t wins = 0;
        const auto& tr = report.variant("time").runs;
        const auto& fr = report.variant("fourier").runs;
        for (std::size_t i = 0; i < tr.size(); ++i) wins += fr[i].test.mse < tr[i].test.mse;
        checks["fourier_wins_per_seed"] = wins;
    } else if (name == "poly") {
        nlohmann::json by_degree = nlohmann::json::array();
        nlohmann::json violations = nlohmann::json::array();
        for (std::size_t i = 0; i < s.poly_degrees.size(); ++i) {
            const VariantResult& v = report.variants[i];
            by_degree.push_back({{"degree", s.poly_degrees[i]}, {"mean_mse", v.mean_mse}, {"std_mse", v.std_mse}});
            if (i > 0) {
                const VariantResult& prev = report.variants[i - 1];
                if (v.mean_mse > prev.mean_mse + std::max(v.std_mse, prev.std_mse)) {
                    violations.push_back({{"from_degree", s.poly_degrees[i - 1]},
                                          {"to_degree", s.poly_degrees[i]}});
                }
            }
        }
        report.extra["mse_by_degree"] = by_degree;
        report.extra["softmax_mean_mse"] = report.variants.back().mean_mse;
        checks["non_increasing_violations"] = violations;
    }
    report.extra["checks"] = checks;
    report.wall_seconds = elapsed_since(start);
    return report;
}

// ---------------------------------------------------------------------------
// Decomposition diagnostics and ablations
// ---------------------------------------------------------------------------

DecomposeOutput run_decompose(const Dataset& dataset, std::size_t period) {
    DecomposeOutput out;
    out.components = stl_decompose(dataset.series, period);
    out.strength_per_channel = seasonality_strength_per_channel(dataset.series, period);
    out.strength = seasonality_strength(dataset.series, period);
    return out;
}

void write_components_csv(const Dataset& dataset, const DecomposeOutput& out, const std::string& path) {
    std::ofstream file(path);
    if (!file) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    file << "date";
    for (std::size_t c = 0; c < dataset.channels(); ++c) {
        const std::string& n = dataset.channel_names[c];
        file << ',' << n << "_trend," << n << "_seasonal," << n << "_remainder";
    }
    file << '\n';
    char buf[32];
    for (std::size_t t = 0; t < dataset.length(); ++t) {
        file << (t < dataset.timestamps.size() ? dataset.timestamps[t] : std::to_string(t));
        for (std::size_t c = 0; c < dataset.channels(); ++c) {
            for (const RealMatrix* m : {&out.components.trend, &out.components.seasonal,
                                        &out.components.remainder}) {
                std::snprintf(buf, sizeof buf, "%.17g", (*m)(t, c));
                file << ',' << buf;
            }
        }
        file << '\n';
    }
    if (!file) throw Error(ErrorKind::io, "failed writing '" + path + "'");
}

nlohmann::json AblationSettings::to_json() const {
    return {{"max_rows", max_rows},
            {"horizons", horizons},
            {"context", context},
            {"train_windows", train_windows},
            {"val_windows", val_windows},
            {"test_windows", test_windows},
            {"stride", stride},
            {"standardize", standardize},
            {"seeds", seeds},
            {"model", tdf::to_json(model)},
            {"train", tdf::to_json(train)}};
}

std::vector<Variant> ablation_variants(const ModelConfig& base) {
    std::vector<Variant> out;
    ModelConfig full = base;
    full.layout = Layout::full;
    full.trend_branch = TrendBranch::mlp;
    full.seasonal_domain = AttentionDomain::fourier();
    full.seasonal_activation = Activation::softmax();
    full.revin = true;
    out.push_back({"TDformer", full});

    ModelConfig ta = full;
    ta.seasonal_domain = AttentionDomain::time();
    out.push_back({"TDformer-MLP-TA", ta});

    ModelConfig wa = full;
    wa.seasonal_domain = AttentionDomain::wavelet(base.seasonal_domain.kind == AttentionDomain::Kind::wavelet
                                                      ? base.seasonal_domain.levels
                                                      : 3);
    out.push_back({"TDformer-MLP-WA", wa});

    ModelConfig tafa = full;
    tafa.trend_branch = TrendBranch::time_attention;
    out.push_back({"TDformer-TA-FA", tafa});

    ModelConfig norevin = full;
    norevin.revin = false;
    out.push_back({"TDformer-w/o-RevIN", norevin});
    return out;
}

namespace {

DataSplit dataset_split(const Dataset& dataset, std::size_t context, std::size_t horizon,
                        const AblationSettings& s) {
    const Dataset recent = tail(dataset, s.max_rows);
    RealMatrix series = recent.series;
    if (s.standardize) {
        const std::size_t fit = std::max<std::size_t>(train_region_end(series.rows(), context, horizon, s.stride), 1);
        series = standardize(series, fit);
    }
    DataSplit split = split_711(make_windows(series, context, horizon, s.stride));
    split.train = thin(std::move(split.train), s.train_windows);
    split.val = thin(std::move(split.val), s.val_windows);
    split.test = thin(std::move(split.test), s.test_windows);
    if (split.train.empty() || split.val.empty() || split.test.empty()) {
        throw Error(ErrorKind::config, "dataset '" + dataset.name + "' with " +
                                           std::to_string(recent.length()) + " rows is too short for context " +
                                           std::to_string(context) + " and horizon " + std::to_string(horizon));
    }
    return split;
}

}  // namespace

ExperimentReport run_ablate(const Dataset& dataset, const AblationSettings& s) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport report;
    report.name = "ablate";
    report.config = s.to_json();
    report.config["dataset"] = dataset.name;
    report.seeds = s.seeds;
    for (std::size_t horizon : s.horizons) {
        ModelConfig base = s.model;
        base.context = s.context;
        base.horizon = horizon;
        base.channels = dataset.channels();
        const DataSplit split = dataset_split(dataset, s.context, horizon, s);
        for (const Variant& v : ablation_variants(base)) {
            VariantResult r;
            r.name = s.horizons.size() > 1 ? v.name + "@" + std::to_string(horizon) : v.name;
            r.config = to_json(v.config);
            try {
                v.config.validate();
            } catch (const Error& e) {
                r.skipped = e.what();
                report.variants.push_back(std::move(r));
                continue;
            }
            for (std::uint64_t seed : s.seeds) r.runs.push_back(train_seed(v.config, s.train, split, seed));
            r.summarize();
            report.variants.push_back(std::move(r));
        }
    }
    nlohmann::json checks = nlohmann::json::object();
    if (s.horizons.size() == 1) {
        const double full = report.variant("TDformer").mean_mse;
        const VariantResult& ta = report.variant("TDformer-MLP-TA");
        const VariantResult& tafa = report.variant("TDformer-TA-FA");
        if (ta.skipped.empty()) checks["tdformer_le_mlp_ta"] = full <= ta.mean_mse;
        if (tafa.skipped.empty()) checks["tdformer_le_ta_fa"] = full <= tafa.mean_mse;
    }
    report.extra["checks"] = checks;
    report.wall_seconds = elapsed_since(start);
    return report;
}

ExperimentReport run_train(const Dataset& dataset, const ModelConfig& model, const TrainConfig& train,
                           const AblationSettings& s, TDformerParams* best_params) {
    const auto start = std::chrono::steady_clock::now();
    ModelConfig cfg = model;
    cfg.channels = dataset.channels();
    cfg.validate();
    const DataSplit split = dataset_split(dataset, cfg.context, cfg.horizon, s);
    ExperimentReport report;
    report.name = "train";
    report.config = {{"model", to_json(cfg)}, {"train", to_json(train)}, {"data", s.to_json()}};
    report.config["data"].erase("model");
    report.config["data"].erase("train");
    report.config["dataset"] = dataset.name;
    report.seeds = s.seeds;
    report.extra["split_sizes"] = {{"train", split.train.size()},
                                   {"val", split.val.size()},
                                   {"test", split.test.size()}};
    VariantResult r;
    r.name = "TDformer";
    r.config = to_json(cfg);
    for (std::size_t i = 0; i < s.seeds.size(); ++i)
        r.runs.push_back(train_seed(cfg, train, split, s.seeds[i], i == 0 ? best_params : nullptr));
    r.summarize();
    report.variants.push_back(std::move(r));
    report.wall_seconds = elapsed_since(start);
    return report;
}

Dataset synthetic_seasonal_dataset(std::size_t rows, std::uint64_t seed) {
    const RealMatrix daily = gen_sin(rows, 16.0, 1.0);
    const RealMatrix slow = gen_sin(rows, 256.0, 0.5, 0.3);
    const RealMatrix drift = gen_linear_trend(rows, 2e-4, 0.0);
    const RealMatrix noise = gen_white_noise(rows, 0.1, seed);
    RealMatrix series(rows, 1);
    for (std::size_t t = 0; t < rows; ++t)
        series(t, 0) = daily(t, 0) + slow(t, 0) + drift(t, 0) + noise(t, 0);
    Dataset d = make_dataset("synthetic-seasonal", std::move(series));
    d.channel_names = {"value"};
    return d;
}

}  // namespace tdf
