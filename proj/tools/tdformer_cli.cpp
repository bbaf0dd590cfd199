#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tdformer/checkpoint.hpp"
#include "tdformer/data.hpp"
#include "tdformer/experiments.hpp"
#include "tdformer/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tdf;

namespace {

enum ExitCode { ok = 0, property_failure = 1, usage_error = 2, io_error = 3 };

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::io:
        case ErrorKind::parse: return io_error;
        case ErrorKind::numeric: return property_failure;
        default: return usage_error;
    }
}

/// Flag values gathered from the config file, then overridden by any flag
/// given on the command line. Keys are flag names with '-' replaced by '_'.
class Settings {
public:
    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorKind::io, "cannot open config file '" + path + "'");
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::config, "config file '" + path + "': " + e.what());
        }
        if (!j.is_object()) throw Error(ErrorKind::config, "config file '" + path + "' must hold a JSON object");
        for (auto& [key, value] : j.items()) values_[normalize(key)] = value;
    }

    void set(const std::string& key, json value) { values_[normalize(key)] = std::move(value); }
    bool has(const std::string& key) const { return values_.contains(normalize(key)); }

    template <class T>
    T get(const std::string& key, T fallback) const {
        const auto it = values_.find(normalize(key));
        if (it == values_.end()) return fallback;
        try {
            return it->second.get<T>();
        } catch (const json::exception&) {
            throw Error(ErrorKind::config, "setting '" + key + "' has the wrong type: " + it->second.dump());
        }
    }

    json dump() const { return json(values_); }

private:
    static std::string normalize(std::string key) {
        std::replace(key.begin(), key.end(), '-', '_');
        return key;
    }
    std::map<std::string, json> values_;
};

/// Registers one flag that writes into Settings only when given.
template <class T>
struct FlagValue {
    T value{};
    CLI::Option* option = nullptr;
};

struct CommonFlags {
    std::string config_path;
    FlagValue<std::uint64_t> seed;
    FlagValue<std::size_t> seeds;
    FlagValue<std::size_t> context, horizon, d_model, d_ff, enc_layers, dec_layers, levels;
    FlagValue<std::string> domain, activation, trend_branch, kernels, out, dataset, synth;
    FlagValue<double> period, lr;
    FlagValue<std::size_t> epochs, batch_size, patience, train_windows, max_rows;
    bool no_revin = false, standardize = false, positional = false, strict = false;
    CLI::Option* no_revin_opt = nullptr;
    CLI::Option* standardize_opt = nullptr;
    CLI::Option* positional_opt = nullptr;
};

template <class T>
void add_flag(CLI::App* app, FlagValue<T>& f, const std::string& name, const std::string& help) {
    f.option = app->add_option(name, f.value, help);
}

void add_common(CLI::App* app, CommonFlags& f) {
    app->add_option("--config", f.config_path, "JSON file mirroring these flags; flags override it");
    add_flag(app, f.seed, "--seed", "first seed (default 0)");
    add_flag(app, f.seeds, "--seeds", "number of consecutive seeds starting at --seed");
    add_flag(app, f.context, "--context", "context length");
    add_flag(app, f.horizon, "--horizon", "forecast horizon");
    add_flag(app, f.d_model, "--d-model", "model width");
    add_flag(app, f.d_ff, "--d-ff", "feed-forward width");
    add_flag(app, f.enc_layers, "--enc-layers", "encoder layers");
    add_flag(app, f.dec_layers, "--dec-layers", "decoder layers");
    add_flag(app, f.domain, "--domain", "seasonal attention domain: time, fourier, wavelet or wavelet:N");
    add_flag(app, f.levels, "--levels", "wavelet levels (default 3)");
    add_flag(app, f.activation, "--activation", "identity, softmax or poly:D");
    add_flag(app, f.trend_branch, "--trend-branch", "mlp or time-attn");
    f.no_revin_opt = app->add_flag("--no-revin", f.no_revin, "disable reversible instance normalization");
    f.positional_opt = app->add_flag("--positional,!--no-positional", f.positional,
                                     "add sinusoidal position codes (on by default for synth)");
    add_flag(app, f.kernels, "--kernels", "comma-separated odd moving-average kernels");
    add_flag(app, f.period, "--period", "seasonal period");
    add_flag(app, f.out, "--out", "output directory (default out)");
    add_flag(app, f.dataset, "--dataset", "CSV file: timestamp column then numeric channels");
    add_flag(app, f.synth, "--synth", "built-in series instead of --dataset: sin, vary, trend, spike, seasonal");
    f.standardize_opt = app->add_flag("--standardize", f.standardize, "z-score channels on the training rows");
    add_flag(app, f.epochs, "--epochs", "training epochs");
    add_flag(app, f.lr, "--lr", "Adam learning rate");
    add_flag(app, f.batch_size, "--batch-size", "mini-batch size");
    add_flag(app, f.patience, "--patience", "early-stopping patience in epochs (0 disables)");
    add_flag(app, f.train_windows, "--train-windows", "evenly spaced training windows to keep");
    add_flag(app, f.max_rows, "--max-rows", "keep only the most recent rows of a dataset");
    app->add_flag("--strict", f.strict, "exit 1 when a report check fails");
}

template <class T>
void merge(Settings& s, const FlagValue<T>& f, const std::string& key) {
    if (f.option && f.option->count() > 0) s.set(key, f.value);
}

Settings collect(const CommonFlags& f) {
    Settings s;
    if (!f.config_path.empty()) s.load_file(f.config_path);
    merge(s, f.seed, "seed");
    merge(s, f.seeds, "seeds");
    merge(s, f.context, "context");
    merge(s, f.horizon, "horizon");
    merge(s, f.d_model, "d_model");
    merge(s, f.d_ff, "d_ff");
    merge(s, f.enc_layers, "enc_layers");
    merge(s, f.dec_layers, "dec_layers");
    merge(s, f.domain, "domain");
    merge(s, f.levels, "levels");
    merge(s, f.activation, "activation");
    merge(s, f.trend_branch, "trend_branch");
    merge(s, f.kernels, "kernels");
    merge(s, f.period, "period");
    merge(s, f.out, "out");
    merge(s, f.dataset, "dataset");
    merge(s, f.synth, "synth");
    merge(s, f.epochs, "epochs");
    merge(s, f.lr, "lr");
    merge(s, f.batch_size, "batch_size");
    merge(s, f.patience, "patience");
    merge(s, f.train_windows, "train_windows");
    merge(s, f.max_rows, "max_rows");
    if (f.no_revin_opt->count() > 0) s.set("no_revin", true);
    if (f.standardize_opt->count() > 0) s.set("standardize", true);
    if (f.positional_opt->count() > 0) s.set("positional", f.positional);
    return s;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& what) {
    std::vector<std::size_t> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(item, &used);
            if (used != item.size() || v <= 0) throw std::invalid_argument(item);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw Error(ErrorKind::config, what + ": '" + item + "' is not a positive integer");
        }
    }
    if (out.empty()) throw Error(ErrorKind::config, what + " list is empty");
    return out;
}

std::vector<std::size_t> size_list(const Settings& s, const std::string& key,
                                   std::vector<std::size_t> fallback) {
    if (!s.has(key)) return fallback;
    const json v = s.get<json>(key, json());
    if (v.is_array()) return v.get<std::vector<std::size_t>>();
    if (v.is_number_unsigned()) return {v.get<std::size_t>()};
    return parse_size_list(v.get<std::string>(), key);
}

std::vector<std::uint64_t> seed_list(const Settings& s, std::size_t default_count) {
    const auto first = s.get<std::uint64_t>("seed", 0);
    const auto count = s.get<std::size_t>("seeds", default_count);
    if (count == 0) throw Error(ErrorKind::config, "--seeds must be at least 1");
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(first + i);
    return out;
}

/// Applies the model flags on top of `cfg`.
ModelConfig apply_model(const Settings& s, ModelConfig cfg) {
    cfg.context = s.get("context", cfg.context);
    cfg.horizon = s.get("horizon", cfg.horizon);
    cfg.d_model = s.get("d_model", cfg.d_model);
    cfg.d_ff = s.get("d_ff", cfg.d_ff);
    cfg.enc_layers = s.get("enc_layers", cfg.enc_layers);
    cfg.dec_layers = s.get("dec_layers", cfg.dec_layers);
    const std::size_t levels = s.get<std::size_t>("levels", 3);
    if (s.has("domain")) cfg.seasonal_domain = AttentionDomain::parse(s.get<std::string>("domain", ""), levels);
    else if (s.has("levels") && cfg.seasonal_domain.kind == AttentionDomain::Kind::wavelet)
        cfg.seasonal_domain = AttentionDomain::wavelet(levels);
    if (s.has("activation")) cfg.seasonal_activation = Activation::parse(s.get<std::string>("activation", ""));
    if (s.has("trend_branch")) cfg.trend_branch = parse_trend_branch(s.get<std::string>("trend_branch", ""));
    if (s.get("no_revin", false)) cfg.revin = false;
    cfg.positional = s.get("positional", cfg.positional);
    cfg.kernels = size_list(s, "kernels", cfg.kernels);
    return cfg;
}

TrainConfig apply_train(const Settings& s, TrainConfig cfg) {
    cfg.epochs = s.get("epochs", cfg.epochs);
    cfg.lr = s.get("lr", cfg.lr);
    cfg.batch_size = s.get("batch_size", cfg.batch_size);
    cfg.patience = s.get("patience", cfg.patience);
    cfg.validate();
    return cfg;
}

AblationSettings apply_data(const Settings& s, AblationSettings a) {
    a.max_rows = s.get("max_rows", a.max_rows);
    a.train_windows = s.get("train_windows", a.train_windows);
    a.standardize = s.get("standardize", a.standardize);
    return a;
}

std::string out_dir(const Settings& s) {
    const std::string dir = s.get<std::string>("out", "out");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create output directory '" + dir + "': " + ec.message());
    return dir;
}

Dataset load_input(const Settings& s, std::size_t default_rows) {
    if (s.has("dataset")) return load_csv(s.get<std::string>("dataset", ""));
    const std::string name = s.get<std::string>("synth", "seasonal");
    if (name == "seasonal") return synthetic_seasonal_dataset(default_rows, s.get<std::uint64_t>("seed", 0));
    StudySettings st;
    st.period = s.get("period", st.period);
    st.series_length = default_rows;
    st.context = s.get("context", st.context);
    st.horizon = s.get("horizon", st.horizon);
    Dataset d = make_dataset("synth-" + name, study_series(name, st, s.get<std::uint64_t>("seed", 0)));
    d.channel_names = {"value"};
    return d;
}

bool checks_pass(const json& checks) {
    for (const auto& [key, value] : checks.items()) {
        if (value.is_boolean() && !value.get<bool>()) return false;
        if (value.is_array() && !value.empty()) return false;
    }
    return true;
}

void print_variants(const ExperimentReport& r) {
    for (const VariantResult& v : r.variants) {
        if (!v.skipped.empty()) {
            std::printf("  %-22s skipped: %s\n", v.name.c_str(), v.skipped.c_str());
            continue;
        }
        std::printf("  %-22s mse %.6g ± %.3g   mae %.6g ± %.3g\n", v.name.c_str(), v.mean_mse, v.std_mse,
                    v.mean_mae, v.std_mae);
    }
}

int finish_report(ExperimentReport& report, const std::string& dir, const std::string& stem, bool strict) {
    const std::string json_path = dir + "/" + stem + ".json";
    const std::string csv_path = dir + "/" + stem + ".csv";
    write_table_csv(report, csv_path);
    report.artifacts.push_back(csv_path);
    report.artifacts.push_back(json_path);
    write_json(report.to_json(), json_path);
    std::printf("%s (%.1f s)\n", report.name.c_str(), report.wall_seconds);
    print_variants(report);
    if (report.extra.contains("checks") && !report.extra["checks"].empty())
        std::printf("  checks: %s\n", report.extra["checks"].dump().c_str());
    std::printf("  wrote %s\n", json_path.c_str());
    if (strict && report.extra.contains("checks") && !checks_pass(report.extra["checks"])) return property_failure;
    return ok;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_equiv(const Settings& s, const std::vector<std::size_t>& lengths, std::size_t draws) {
    EquivSettings es;
    es.lengths = lengths;
    es.draws = draws;
    es.seed = s.get<std::uint64_t>("seed", 0);
    es.activation = Activation::parse(s.get<std::string>("activation", "identity"));
    es.wavelet_levels = s.get<std::size_t>("levels", es.wavelet_levels);
    const EquivResult r = run_equiv_check(es);
    const std::string dir = out_dir(s);
    json j = r.to_json();
    j["activation"] = es.activation.to_string();
    j["draws"] = es.draws;
    j["seed"] = es.seed;
    write_json(j, dir + "/equiv.json");
    for (const EquivCase& c : r.cases) {
        std::printf("  L=%-4zu D=%-2zu max deviation %.3e%s\n", c.length, c.dim, c.max_deviation,
                    c.wavelet_skipped ? "  (wavelet skipped: non-power-of-two)" : "");
    }
    std::printf("max deviation %.3e -> %s\n", r.max_deviation, r.equivalent ? "equivalent" : "not equivalent");
    if (es.activation.kind != Activation::Kind::identity) return ok;  // non-equivalence is the expected outcome
    return r.equivalent ? ok : property_failure;
}

int cmd_synth(const Settings& s, const std::string& name) {
    StudySettings st;
    st.context = s.get("context", st.context);
    st.horizon = s.get("horizon", st.horizon);
    st.period = s.get("period", st.period);
    st.train_windows = s.get("train_windows", st.train_windows);
    st.seeds = seed_list(s, st.seeds.size());
    st.model = apply_model(s, st.model);
    st.model.context = st.context;
    st.model.horizon = st.horizon;
    st.train = apply_train(s, st.train);
    ExperimentReport report = run_synth(name, st);
    const std::string dir = out_dir(s);
    const std::string stem = "synth-" + name;
    if (report.extra.contains("sample_efficiency")) {
        const std::string path = dir + "/" + stem + "-sample-efficiency.csv";
        std::ofstream out(path);
        out << "train_windows";
        for (const VariantResult& v : report.variants) out << ',' << v.name;
        out << '\n';
        for (const json& row : report.extra["sample_efficiency"]) {
            out << row["train_windows"].get<std::size_t>();
            for (const VariantResult& v : report.variants) out << ',' << row[v.name].get<double>();
            out << '\n';
        }
        if (!out) throw Error(ErrorKind::io, "failed writing '" + path + "'");
        report.artifacts.push_back(path);
    }
    if (report.extra.contains("mse_by_degree")) {
        const std::string path = dir + "/" + stem + "-degree.csv";
        std::ofstream out(path);
        out << "degree,mse_mean,mse_std\n";
        for (const json& row : report.extra["mse_by_degree"])
            out << row["degree"].get<int>() << ',' << row["mean_mse"].get<double>() << ','
                << row["std_mse"].get<double>() << '\n';
        if (!out) throw Error(ErrorKind::io, "failed writing '" + path + "'");
        report.artifacts.push_back(path);
    }
    return finish_report(report, dir, stem, s.get("strict", false));
}

ModelConfig default_train_model() {
    ModelConfig m = StudySettings::default_study_model();
    m.context = 96;
    m.horizon = 96;
    return m;
}

int cmd_train(const Settings& s) {
    const Dataset data = load_input(s, 2000);
    AblationSettings a = apply_data(s, AblationSettings{});
    a.seeds = seed_list(s, 1);
    ModelConfig m = apply_model(s, default_train_model());
    m.channels = data.channels();
    m.validate();
    const TrainConfig t = apply_train(s, StudySettings::default_study_train());
    TDformerParams best;
    ExperimentReport report = run_train(data, m, t, a, &best);
    const std::string dir = out_dir(s);
    const std::string ckpt_path = dir + "/model.ckpt";
    save_checkpoint({m, a.seeds.front(), report.variants.front().runs.front().best_epoch, best}, ckpt_path);
    report.artifacts.push_back(ckpt_path);
    return finish_report(report, dir, "train", false);
}

int cmd_evaluate(const Settings& s, const std::string& checkpoint_path) {
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    Settings input = s;
    if (!input.has("context")) input.set("context", ck.config.context);
    if (!input.has("horizon")) input.set("horizon", ck.config.horizon);
    const Dataset data = load_input(input, 2000);
    if (data.channels() != ck.config.channels) {
        throw Error(ErrorKind::config, "checkpoint expects " + std::to_string(ck.config.channels) +
                                           " channels, dataset has " + std::to_string(data.channels()));
    }
    const AblationSettings a = apply_data(s, AblationSettings{});
    const Dataset recent = tail(data, a.max_rows);
    RealMatrix series = recent.series;
    if (a.standardize) {
        series = standardize(series, std::max<std::size_t>(
                                         train_region_end(series.rows(), ck.config.context, ck.config.horizon), 1));
    }
    const DataSplit split = split_711(make_windows(series, ck.config.context, ck.config.horizon));
    if (split.test.empty()) throw Error(ErrorKind::config, "dataset too short for the checkpoint's windows");
    const Metrics m = evaluate(ck.params, ck.config, split.test);
    const std::string dir = out_dir(s);
    const json j{{"checkpoint", checkpoint_path}, {"dataset", data.name},      {"config", to_json(ck.config)},
                 {"seed", ck.seed},               {"epoch", ck.epoch},         {"test_windows", split.test.size()},
                 {"test_mse", m.mse},             {"test_mae", m.mae}};
    write_json(j, dir + "/evaluate.json");
    std::printf("test mse %.6g  mae %.6g over %zu windows\n", m.mse, m.mae, split.test.size());
    return ok;
}

int cmd_decompose(const Settings& s) {
    const Dataset data = load_input(s, 2048);
    const std::size_t period = static_cast<std::size_t>(s.get<double>("period", 24.0));
    const DecomposeOutput d = run_decompose(data, period);
    const std::string dir = out_dir(s);
    const std::string csv = dir + "/components.csv";
    write_components_csv(data, d, csv);
    json per = json::object();
    for (std::size_t c = 0; c < data.channels(); ++c) per[data.channel_names[c]] = d.strength_per_channel[c];
    write_json({{"dataset", data.name},
                {"period", period},
                {"rows", data.length()},
                {"strength", d.strength},
                {"strength_per_channel", per},
                {"artifacts", {csv}}},
               dir + "/decompose.json");
    std::printf("seasonality strength %.4f (period %zu, %zu rows)\n", d.strength, period, data.length());
    return ok;
}

int cmd_ablate(const Settings& s, const std::vector<std::size_t>& horizons) {
    const Dataset data = load_input(s, 10000);
    AblationSettings a = apply_data(s, AblationSettings{});
    a.context = s.get("context", a.context);
    a.horizons = horizons;
    a.seeds = seed_list(s, a.seeds.size());
    a.model = apply_model(s, a.model);
    a.train = apply_train(s, a.train);
    ExperimentReport report = run_ablate(data, a);
    return finish_report(report, out_dir(s), "ablate", s.get("strict", false));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-, Fourier- and wavelet-domain attention forecasting toolkit"};
    app.require_subcommand(1);

    std::map<const CLI::App*, CommonFlags> flags;
    std::string synth_name;
    std::string checkpoint_path;
    std::string lengths_text = "6,8,16,64";
    std::string horizons_text = "96";
    std::size_t draws = 20;

    CLI::App* equiv = app.add_subcommand("equiv-check", "check that identity attention agrees across domains");
    add_common(equiv, flags[equiv]);
    equiv->add_option("--lengths", lengths_text, "comma-separated sequence lengths");
    equiv->add_option("--draws", draws, "random draws per case");

    CLI::App* synth = app.add_subcommand("synth", "synthetic attention studies");
    add_common(synth, flags[synth]);
    synth->add_option("experiment", synth_name, "sin, vary, trend, spike or poly")->required();

    CLI::App* train_cmd = app.add_subcommand("train", "train one model and write a checkpoint");
    add_common(train_cmd, flags[train_cmd]);

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on a dataset's test split");
    add_common(eval_cmd, flags[eval_cmd]);
    eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint written by train")->required();

    CLI::App* decompose = app.add_subcommand("decompose", "classical decomposition and seasonality strength");
    add_common(decompose, flags[decompose]);

    CLI::App* ablate = app.add_subcommand("ablate", "train the full model and its ablations");
    add_common(ablate, flags[ablate]);
    ablate->add_option("--horizons", horizons_text, "comma-separated horizons");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage_error;
    }

    try {
        const CLI::App* chosen = app.get_subcommands().front();
        const CommonFlags& f = flags.at(chosen);
        Settings s = collect(f);
        s.set("strict", f.strict || s.get("strict", false));
        if (equiv->parsed()) return cmd_equiv(s, parse_size_list(lengths_text, "--lengths"), draws);
        if (synth->parsed()) return cmd_synth(s, synth_name);
        if (train_cmd->parsed()) return cmd_train(s);
        if (eval_cmd->parsed()) return cmd_evaluate(s, checkpoint_path);
        if (decompose->parsed()) return cmd_decompose(s);
        if (ablate->parsed()) return cmd_ablate(s, parse_size_list(horizons_text, "--horizons"));
    } catch (const Error& e) {
        std::fprintf(stderr, "error (%s): %s\n", to_string(e.kind()), e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return io_error;
    }
    return usage_error;
}
