#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "gradient_oracle.hpp"
#include "tdformer/checkpoint.hpp"
#include "tdformer/data.hpp"
#include "tdformer/numerics.hpp"
#include "tdformer/training.hpp"
#include "test_util.hpp"

using namespace tdf;
using testutil::error_kind_of;

namespace {

ModelConfig tiny() {
    ModelConfig cfg = testutil::tiny_config(AttentionDomain::fourier(), Activation::softmax());
    cfg.channels = 1;
    return cfg;
}

DataSplit sine_split(const ModelConfig& cfg) {
    return split_711(make_windows(gen_sin(200, 8.0), cfg.context, cfg.horizon, 2));
}

std::string temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "tdformer_test_training";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

}  // namespace

TEST_CASE("error metrics") {
    const RealMatrix a(2, 2, std::vector<double>{1, 2, 3, 4});
    const RealMatrix b(2, 2, std::vector<double>{1, 0, 4, 4});
    CHECK(mse(a, b) == doctest::Approx(5.0 / 4.0));
    CHECK(mae(a, b) == doctest::Approx(3.0 / 4.0));
    CHECK(mse(a, a) == 0.0);
    CHECK(error_kind_of([&] { (void)mse(a, RealMatrix(1, 2)); }) == ErrorKind::shape);
}

TEST_CASE("train config validation and JSON") {
    TrainConfig cfg;
    cfg.clip = 1.0;
    cfg.lr = 3e-3;
    CHECK(train_config_from_json(to_json(cfg)) == cfg);
    CHECK(train_config_from_json(to_json(TrainConfig{})) == TrainConfig{});
    TrainConfig bad;
    bad.lr = 0.0;
    CHECK(error_kind_of([&] { bad.validate(); }) == ErrorKind::config);
    bad = TrainConfig{};
    bad.batch_size = 0;
    CHECK(error_kind_of([&] { bad.validate(); }) == ErrorKind::config);
    bad = TrainConfig{};
    bad.clip = -1.0;
    CHECK(error_kind_of([&] { bad.validate(); }) == ErrorKind::config);
}

TEST_CASE("batch loss equals the mean per-window loss") {
    const ModelConfig cfg = tiny();
    const TDformerParams p = init_params(cfg, 1);
    const auto batch = testutil::random_batch(cfg, 3, 5);
    const LossGradient lg = loss_and_gradient(p, cfg, batch);
    CHECK(lg.loss == doctest::Approx(testutil::plain_loss(p, cfg, batch)).epsilon(1e-12));

    // The batch gradient is the mean of single-window gradients.
    GradientSet sum = zeros_like(p);
    for (const auto& w : batch) {
        const LossGradient one = loss_and_gradient(p, cfg, std::span<const SeriesWindow>(&w, 1));
        auto dst = block_pointers(sum);
        const auto src = block_pointers(one.grads);
        for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] += *src[i];
    }
    const auto got = block_pointers(lg.grads);
    const auto want = block_pointers(sum);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(max_abs_diff(3.0 * *got[i], *want[i]) <= 1e-12);
}

TEST_CASE("non-finite inputs raise a numeric error") {
    const ModelConfig cfg = tiny();
    const TDformerParams p = init_params(cfg, 1);
    auto batch = testutil::random_batch(cfg, 1, 5);
    batch[0].target(0, 0) = std::numeric_limits<double>::infinity();
    try {
        (void)loss_and_gradient(p, cfg, batch);
        FAIL("expected a numeric error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::numeric);
        CHECK(std::string(e.what()).find("loss") != std::string::npos);
    }
}

TEST_CASE("global norm") {
    GradientSet g = zeros_like(init_params(tiny(), 1));
    CHECK(global_norm(g) == 0.0);
    g.mixer.weight(0, 0) = 3.0;
    g.revin.beta(0, 0) = 4.0;
    CHECK(global_norm(g) == doctest::Approx(5.0));
}

TEST_CASE("first Adam step moves every parameter by the learning rate") {
    const ModelConfig cfg = tiny();
    TDformerParams p = init_params(cfg, 1);
    const TDformerParams before = p;
    GradientSet g = zeros_like(p);
    g.mixer.weight(0, 0) = 0.25;
    g.mixer.weight(0, 1) = -40.0;
    AdamState st = adam_init(p);
    AdamConfig ac;
    ac.lr = 0.01;
    adam_step(p, g, st, 1, ac);
    // Bias correction makes the first step lr·g/(|g| + ε).
    CHECK(p.mixer.weight(0, 0) - before.mixer.weight(0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(p.mixer.weight(0, 1) - before.mixer.weight(0, 1) == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(max_abs_diff(p.mlp.layer1.weight, before.mlp.layer1.weight) == 0.0);
}

TEST_CASE("Adam matches a scalar oracle over several steps") {
    const ModelConfig cfg = tiny();
    TDformerParams p = init_params(cfg, 1);
    double x = p.revin.beta(0, 0);
    double m = 0.0, v = 0.0;
    AdamState st = adam_init(p);
    const AdamConfig ac{0.05};
    for (std::size_t t = 1; t <= 5; ++t) {
        GradientSet g = zeros_like(p);
        const double grad = 2.0 * (x - 1.0);
        g.revin.beta(0, 0) = grad;
        adam_step(p, g, st, t, ac);
        m = 0.9 * m + 0.1 * grad;
        v = 0.999 * v + 0.001 * grad * grad;
        const double mh = m / (1.0 - std::pow(0.9, static_cast<double>(t)));
        const double vh = v / (1.0 - std::pow(0.999, static_cast<double>(t)));
        x -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
        CHECK(p.revin.beta(0, 0) == doctest::Approx(x).epsilon(1e-12));
    }
}

TEST_CASE("training lowers the validation error and is deterministic") {
    ModelConfig cfg = tiny();
    cfg.layout = Layout::trend_only;
    TrainConfig tc;
    tc.lr = 3e-3;
    tc.batch_size = 8;
    tc.epochs = 15;
    tc.patience = 0;
    const DataSplit split = sine_split(cfg);
    const TrainResult a = train(cfg, tc, split);
    const TrainResult b = train(cfg, tc, split);
    REQUIRE(a.curve.size() == 15);
    CHECK(a.best_epoch > 0);
    CHECK(a.best_val_mse < evaluate(init_params(cfg, cfg.seed), cfg, split.val).mse);
    CHECK(to_json(a) == to_json(b));
    CHECK(a.test.mse == evaluate(a.best_params, cfg, split.test).mse);
    CHECK_FALSE(a.stopped_early);
}

TEST_CASE("early stopping triggers after the patience runs out") {
    ModelConfig cfg = tiny();
    TrainConfig tc;
    tc.lr = 10.0;  // diverges quickly, so validation stops improving
    tc.batch_size = 4;
    tc.epochs = 40;
    tc.patience = 2;
    tc.clip = 1.0;
    const TrainResult r = train(cfg, tc, sine_split(cfg));
    CHECK(r.stopped_early);
    CHECK(r.curve.size() < 40);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : r.curve) best = std::min(best, e.val_mse);
    CHECK(r.best_val_mse <= best);
}

TEST_CASE("training rejects empty splits") {
    const ModelConfig cfg = tiny();
    DataSplit s = sine_split(cfg);
    s.val.clear();
    CHECK(error_kind_of([&] { (void)train(cfg, TrainConfig{}, s); }) == ErrorKind::config);
}

TEST_CASE("checkpoint round trip") {
    ModelConfig cfg = tiny();
    cfg.seasonal_domain = AttentionDomain::wavelet(2);
    cfg.horizon = 16;
    Checkpoint ck{cfg, 7, 12, init_params(cfg, 3)};
    const std::string path = temp_path("model.ckpt");
    save_checkpoint(ck, path);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.config == cfg);
    CHECK(back.seed == 7);
    CHECK(back.epoch == 12);
    const auto a = block_pointers(ck.params);
    const auto b = block_pointers(back.params);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
    const RealMatrix x = testutil::random_matrix(16, 1, 4);
    CHECK(tdformer_forward(x, ck.params, cfg) == tdformer_forward(x, back.params, cfg));
}

TEST_CASE("checkpoint corruption is detected") {
    const ModelConfig cfg = tiny();
    const std::string path = temp_path("corrupt.ckpt");
    save_checkpoint({cfg, 0, 0, init_params(cfg, 1)}, path);
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 8);
    CHECK(error_kind_of([&] { (void)load_checkpoint(path); }) == ErrorKind::parse);

    save_checkpoint({cfg, 0, 0, init_params(cfg, 1)}, path);
    std::ofstream(path, std::ios::app | std::ios::binary) << "extra";
    CHECK(error_kind_of([&] { (void)load_checkpoint(path); }) == ErrorKind::parse);

    std::ofstream(path) << "{\"format\":\"something-else\"}\n";
    CHECK(error_kind_of([&] { (void)load_checkpoint(path); }) == ErrorKind::parse);
    CHECK(error_kind_of([&] { (void)load_checkpoint(temp_path("absent.ckpt")); }) == ErrorKind::io);
}
