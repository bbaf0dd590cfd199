#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tdformer/experiments.hpp"
#include "tdformer/numerics.hpp"
#include "test_util.hpp"

using namespace tdf;
using testutil::error_kind_of;

namespace {

StudySettings tiny_study() {
    StudySettings s;
    s.context = 16;
    s.horizon = 16;
    s.series_length = 160;
    s.period = 8.0;
    s.block_length = 32;
    s.train_windows = 16;
    s.val_windows = 4;
    s.test_windows = 4;
    s.curve_sizes = {8, 16};
    s.poly_degrees = {1, 2};
    s.seeds = {0, 1};
    s.model.context = 16;
    s.model.horizon = 16;
    s.model.d_model = 4;
    s.model.d_ff = 8;
    s.model.mlp_hidden = 8;
    s.train.epochs = 2;
    s.train.batch_size = 8;
    return s;
}

std::string temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "tdformer_test_experiments";
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace

TEST_CASE("sample mean and deviation") {
    const auto [m, s] = mean_std({1.0, 2.0, 3.0, 4.0});
    CHECK(m == doctest::Approx(2.5));
    CHECK(s == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(mean_std({7.0}).second == 0.0);
    CHECK(mean_std({}).first == 0.0);
}

TEST_CASE("equivalence check passes and skips wavelet at non-power-of-two lengths") {
    EquivSettings es;
    es.draws = 5;
    const EquivResult r = run_equiv_check(es);
    CHECK(r.equivalent);
    CHECK(r.max_deviation <= 1e-9);
    REQUIRE(r.cases.size() == 8);
    CHECK(r.cases[0].length == 6);
    CHECK(r.cases[0].wavelet_skipped);
    CHECK(r.cases[0].note.find("non-power-of-two") != std::string::npos);
    CHECK_FALSE(r.cases[2].wavelet_skipped);
    CHECK(r.to_json()["cases"][0]["wavelet"] == "skipped");
}

TEST_CASE("equivalence check detects softmax as non-equivalent") {
    EquivSettings es;
    es.draws = 3;
    es.lengths = {16};
    es.activation = Activation::softmax();
    const EquivResult r = run_equiv_check(es);
    CHECK_FALSE(r.equivalent);
    CHECK(r.max_deviation > 1e-3);
}

TEST_CASE("study series") {
    const StudySettings s = tiny_study();
    CHECK(max_abs_diff(study_series("sin", s, 0), gen_sin(160, 8.0)) == 0.0);
    const RealMatrix spike = study_series("spike", s, 3);
    const RealMatrix clean = gen_sin(160, 8.0);
    const std::size_t region = train_region_end(160, 16, 16);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < 160; ++t) {
        const double d = spike(t, 0) - clean(t, 0);
        if (t >= region) CHECK(d == 0.0);
        if (d != 0.0) {
            CHECK(d == doctest::Approx(5.0));
            ++hits;
        }
    }
    CHECK(max_abs_diff(spike, study_series("spike", s, 3)) == 0.0);
    CHECK(max_abs_diff(study_series("trend", s, 0), gen_linear_trend(160, 0.01, 0.0)) == 0.0);
    CHECK(error_kind_of([&] { (void)study_series("square", s, 0); }) == ErrorKind::config);
    StudySettings frac = s;
    frac.period = 7.5;
    CHECK(error_kind_of([&] { (void)study_series("vary", frac, 0); }) == ErrorKind::invalid_period);
}

TEST_CASE("study split thins each part evenly") {
    const StudySettings s = tiny_study();
    const DataSplit split = study_split(study_series("sin", s, 0), s, 10);
    CHECK(split.train.size() == 10);
    CHECK(split.val.size() == 4);
    CHECK(split.test.size() == 4);
    for (std::size_t i = 1; i < split.train.size(); ++i) CHECK(split.train[i].origin > split.train[i - 1].origin);
    CHECK(split.train.back().origin < split.val.front().origin);
}

TEST_CASE("baseline variants") {
    const StudySettings s = tiny_study();
    const Variant a = attention_variant(s, AttentionDomain::wavelet(2), Activation::softmax(), "w");
    CHECK(a.config.layout == Layout::seasonal_only);
    CHECK(a.config.seasonal_domain == AttentionDomain::wavelet(2));
    const Variant m = mlp_variant(s);
    CHECK(m.config.layout == Layout::trend_only);
    CHECK(m.config.revin);
    StudySettings bad = s;
    bad.context = 12;
    CHECK(error_kind_of([&] {
              (void)attention_variant(bad, AttentionDomain::wavelet(2), Activation::softmax(), "w");
          }) == ErrorKind::config);
}

TEST_CASE("synthetic study report structure and determinism") {
    const StudySettings s = tiny_study();
    const ExperimentReport a = run_synth("sin", s);
    const ExperimentReport b = run_synth("sin", s);
    CHECK(a.to_json(false) == b.to_json(false));
    REQUIRE(a.variants.size() == 3);
    CHECK(a.variants[0].name == "time");
    CHECK(a.variants[0].runs.size() == 2);
    CHECK(a.extra["sample_efficiency"].size() == 2);
    CHECK(a.extra["checks"].contains("fourier_le_time"));
    const auto j = a.to_json(true);
    CHECK(j.contains("wall_clock_seconds"));
    CHECK_FALSE(a.to_json(false).contains("wall_clock_seconds"));
    const VariantResult& t = a.variant("time");
    std::vector<double> m;
    for (const auto& r : t.runs) m.push_back(r.test.mse);
    CHECK(t.mean_mse == doctest::Approx(mean_std(m).first));
    CHECK(error_kind_of([&] { (void)a.variant("missing"); }) == ErrorKind::config);
    CHECK(error_kind_of([&] { (void)run_synth("square", s); }) == ErrorKind::config);
}

TEST_CASE("trend and poly studies carry their checks") {
    StudySettings s = tiny_study();
    s.seeds = {0};
    const ExperimentReport trend = run_synth("trend", s);
    CHECK(trend.variants.front().name == "mlp");
    CHECK(trend.extra["checks"].contains("mlp_below_every_attention"));
    const ExperimentReport poly = run_synth("poly", s);
    REQUIRE(poly.variants.size() == 3);
    CHECK(poly.variants[0].name == "fourier-poly1");
    CHECK(poly.variants.back().name == "fourier-softmax");
    CHECK(poly.extra["mse_by_degree"].size() == 2);
}

TEST_CASE("table CSV and JSON writers") {
    ExperimentReport r;
    r.name = "demo";
    VariantResult v;
    v.name = "a";
    v.runs.push_back({0, {1.0, 0.5}, 3, {}});
    v.runs.push_back({1, {3.0, 1.5}, 4, {}});
    v.summarize();
    r.variants.push_back(v);
    VariantResult skipped;
    skipped.name = "b";
    skipped.skipped = "not applicable";
    r.variants.push_back(skipped);
    const std::string path = temp_dir() + "/table.csv";
    write_table_csv(r, path);
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == "metric,a,b\nmse_mean,2,\nmse_std,1.41421,\nmae_mean,1,\nmae_std,0.707107,\n");
    write_json(r.to_json(false), temp_dir() + "/report.json");
    std::ifstream jin(temp_dir() + "/report.json");
    const auto back = nlohmann::json::parse(jin);
    CHECK(back["variants"][1]["skipped"] == "not applicable");
    CHECK(error_kind_of([&] { write_table_csv(r, "/nonexistent-dir/x.csv"); }) == ErrorKind::io);
}

TEST_CASE("decomposition diagnostics") {
    const Dataset d = synthetic_seasonal_dataset(2048, 1);
    const DecomposeOutput out = run_decompose(d, 16);
    CHECK(out.strength >= 0.9);
    CHECK(out.strength_per_channel.size() == 1);
    const std::string path = temp_dir() + "/components.csv";
    write_components_csv(d, out, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "date,value_trend,value_seasonal,value_remainder");
}

TEST_CASE("ablation variants differ only in their named setting") {
    ModelConfig base = StudySettings::default_study_model();
    const auto vs = ablation_variants(base);
    REQUIRE(vs.size() == 5);
    CHECK(vs[0].name == "TDformer");
    CHECK(vs[0].config.seasonal_domain.kind == AttentionDomain::Kind::fourier);
    CHECK(vs[1].config.seasonal_domain.kind == AttentionDomain::Kind::time);
    CHECK(vs[2].config.seasonal_domain.kind == AttentionDomain::Kind::wavelet);
    CHECK(vs[3].config.trend_branch == TrendBranch::time_attention);
    CHECK_FALSE(vs[4].config.revin);
    for (std::size_t i = 1; i < vs.size(); ++i) {
        ModelConfig c = vs[i].config;
        c.seasonal_domain = vs[0].config.seasonal_domain;
        c.trend_branch = vs[0].config.trend_branch;
        c.revin = vs[0].config.revin;
        CHECK(c == vs[0].config);
    }
}

TEST_CASE("ablation skips variants that cannot run on the data") {
    AblationSettings s;
    s.context = 24;  // wavelet needs a power-of-two context
    s.horizons = {8};
    s.train_windows = 8;
    s.val_windows = 2;
    s.test_windows = 2;
    s.seeds = {0};
    s.model.d_model = 4;
    s.model.d_ff = 8;
    s.model.mlp_hidden = 8;
    s.model.kernels = {3, 5};
    s.train.epochs = 1;
    const ExperimentReport r = run_ablate(synthetic_seasonal_dataset(400, 0), s);
    CHECK_FALSE(r.variant("TDformer-MLP-WA").skipped.empty());
    CHECK(r.variant("TDformer").skipped.empty());
    CHECK(r.variant("TDformer").runs.size() == 1);
    CHECK(r.extra["checks"].contains("tdformer_le_ta_fa"));
}

TEST_CASE("training run on a dataset") {
    AblationSettings s;
    s.train_windows = 8;
    s.val_windows = 2;
    s.test_windows = 2;
    s.seeds = {0, 1};
    s.standardize = true;
    ModelConfig m = StudySettings::default_study_model();
    m.context = 16;
    m.horizon = 8;
    m.d_model = 4;
    m.d_ff = 8;
    m.kernels = {3, 5};
    m.mlp_hidden = 8;
    TrainConfig t = StudySettings::default_study_train();
    t.epochs = 1;
    TDformerParams best;
    const ExperimentReport r = run_train(synthetic_seasonal_dataset(300, 0), m, t, s, &best);
    CHECK(r.variants.front().runs.size() == 2);
    CHECK(parameter_count(best) == parameter_count(m));
    CHECK(r.extra["split_sizes"]["train"] == 8);
    const ExperimentReport again = run_train(synthetic_seasonal_dataset(300, 0), m, t, s);
    CHECK(r.to_json(false) == again.to_json(false));

    s.max_rows = 20;
    CHECK(error_kind_of([&] { (void)run_train(synthetic_seasonal_dataset(300, 0), m, t, s); }) == ErrorKind::config);
}
