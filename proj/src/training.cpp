#include "tdformer/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "tdformer/numerics.hpp"

namespace tdf {

namespace {

// Tapes allocate and free many 100+ KiB matrices per step. With glibc's
// default thresholds each of those becomes an mmap/munmap pair.
void keep_heap_resident() {
#if defined(__GLIBC__)
    static const bool done = [] {
        mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
        mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);
        return true;
    }();
    (void)done;
#endif
}

}  // namespace

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw Error(ErrorKind::config, "learning rate must be positive");
    if (batch_size < 1) throw Error(ErrorKind::config, "batch size must be >= 1");
    if (clip && !(*clip > 0.0)) throw Error(ErrorKind::config, "gradient clip must be positive");
}

nlohmann::json to_json(const TrainConfig& cfg) {
    nlohmann::json j{{"lr", cfg.lr},           {"batch_size", cfg.batch_size},
                     {"epochs", cfg.epochs},   {"seed", cfg.seed},
                     {"patience", cfg.patience}};
    j["clip"] = cfg.clip ? nlohmann::json(*cfg.clip) : nlohmann::json(nullptr);
    return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    try {
        cfg.lr = j.value("lr", cfg.lr);
        cfg.batch_size = j.value("batch_size", cfg.batch_size);
        cfg.epochs = j.value("epochs", cfg.epochs);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.patience = j.value("patience", cfg.patience);
        if (j.contains("clip") && !j.at("clip").is_null()) cfg.clip = j.at("clip").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::config, std::string("train config: ") + e.what());
    }
    return cfg;
}

double mse(const RealMatrix& pred, const RealMatrix& target) {
    require_same_shape(pred, target, "mse");
    if (pred.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.values()[i] - target.values()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

double mae(const RealMatrix& pred, const RealMatrix& target) {
    require_same_shape(pred, target, "mae");
    if (pred.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred.values()[i] - target.values()[i]);
    return acc / static_cast<double>(pred.size());
}

void check_finite(const GradientSet& grads, const char* what) {
    for_each_block(grads, [&](const std::string& name, const RealMatrix& g) {
        for (double v : g.values()) {
            if (!std::isfinite(v)) {
                throw Error(ErrorKind::numeric,
                            std::string(what) + ": non-finite value in parameter block '" + name + "'");
            }
        }
    });
}

LossGradient loss_and_gradient(const TDformerParams& params, const ModelConfig& cfg,
                               std::span<const SeriesWindow> batch) {
    if (batch.empty()) throw Error(ErrorKind::config, "loss_and_gradient: empty batch");
    keep_heap_resident();
    LossGradient out;
    out.grads = zeros_like(params);
    auto total = block_pointers(out.grads);
    const double share = 1.0 / static_cast<double>(batch.size());
    for (const SeriesWindow& w : batch) {
        ad::Tape tape;
        const BoundParams bound = bind_parameters(tape, params);
        const graph::Branches b = graph::forward(tape.constant(w.context), bound, cfg);
        const ad::Var loss = ad::scale(ad::mse(b.total, w.target), share);
        tape.backward(loss);
        out.loss += loss.value()(0, 0);
        auto src = block_pointers(bound);
        for (std::size_t i = 0; i < src.size(); ++i) {
            if (tape.requires_grad(*src[i])) *total[i] += tape.grad(*src[i]);
        }
    }
    if (!std::isfinite(out.loss)) throw Error(ErrorKind::numeric, "training loss is not finite");
    check_finite(out.grads, "gradient");
    return out;
}

double global_norm(const GradientSet& grads) {
    double acc = 0.0;
    for_each_block(grads, [&](const std::string&, const RealMatrix& g) {
        for (double v : g.values()) acc += v * v;
    });
    return std::sqrt(acc);
}

AdamState adam_init(const TDformerParams& params) {
    return {zeros_like(params), zeros_like(params), 0};
}

void adam_step(TDformerParams& params, const GradientSet& grads, AdamState& state, std::size_t t,
               const AdamConfig& cfg) {
    if (t < 1) throw Error(ErrorKind::config, "adam_step: step index starts at 1");
    auto p = block_pointers(params);
    auto g = block_pointers(grads);
    auto m = block_pointers(state.m);
    auto v = block_pointers(state.v);
    if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size()) {
        throw Error(ErrorKind::shape, "adam_step: gradient or moment layout differs from parameters");
    }
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t b = 0; b < p.size(); ++b) {
        require_same_shape(*p[b], *g[b], "adam_step");
        auto pv = p[b]->values();
        auto gv = g[b]->values();
        auto mv = m[b]->values();
        auto vv = v[b]->values();
        for (std::size_t i = 0; i < pv.size(); ++i) {
            mv[i] = cfg.beta1 * mv[i] + (1.0 - cfg.beta1) * gv[i];
            vv[i] = cfg.beta2 * vv[i] + (1.0 - cfg.beta2) * gv[i] * gv[i];
            const double mhat = mv[i] / c1;
            const double vhat = vv[i] / c2;
            pv[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
    state.t = t;
}

Metrics evaluate(const TDformerParams& params, const ModelConfig& cfg,
                 std::span<const SeriesWindow> windows) {
    Metrics m;
    if (windows.empty()) return m;
    for (const SeriesWindow& w : windows) {
        const RealMatrix pred = tdformer_forward(w.context, params, cfg);
        m.mse += mse(pred, w.target);
        m.mae += mae(pred, w.target);
    }
    m.mse /= static_cast<double>(windows.size());
    m.mae /= static_cast<double>(windows.size());
    return m;
}

nlohmann::json to_json(const TrainResult& result) {
    nlohmann::json curve = nlohmann::json::array();
    for (const EpochRecord& e : result.curve) {
        curve.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_mse", e.val_mse}});
    }
    return {{"best_epoch", result.best_epoch},
            {"best_val_mse", result.best_val_mse},
            {"test_mse", result.test.mse},
            {"test_mae", result.test.mae},
            {"stopped_early", result.stopped_early},
            {"curve", curve}};
}

TrainResult train(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const DataSplit& split) {
    model_cfg.validate();
    train_cfg.validate();
    if (split.train.empty() || split.val.empty() || split.test.empty()) {
        throw Error(ErrorKind::config, "train: every split needs at least one window (train " +
                                           std::to_string(split.train.size()) + ", val " +
                                           std::to_string(split.val.size()) + ", test " +
                                           std::to_string(split.test.size()) + ")");
    }
    TDformerParams params = init_params(model_cfg, model_cfg.seed);
    TrainResult result;
    result.best_params = params;
    result.best_val_mse = evaluate(params, model_cfg, split.val).mse;

    AdamState state = adam_init(params);
    const AdamConfig adam{train_cfg.lr};
    std::mt19937_64 rng(train_cfg.seed);
    std::vector<std::size_t> order(split.train.size());
    std::size_t step = 0;
    std::size_t stale = 0;
    std::vector<SeriesWindow> batch;

    for (std::size_t epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += train_cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + train_cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(split.train[order[i]]);
            LossGradient lg = loss_and_gradient(params, model_cfg, batch);
            if (train_cfg.clip) {
                const double norm = global_norm(lg.grads);
                if (norm > *train_cfg.clip) {
                    const double s = *train_cfg.clip / norm;
                    for (RealMatrix* g : block_pointers(lg.grads))
                        for (double& v : g->values()) v *= s;
                }
            }
            adam_step(params, lg.grads, state, ++step, adam);
            loss_sum += lg.loss * static_cast<double>(end - start);
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        rec.val_mse = evaluate(params, model_cfg, split.val).mse;
        result.curve.push_back(rec);
        if (rec.val_mse < result.best_val_mse) {
            result.best_val_mse = rec.val_mse;
            result.best_params = params;
            result.best_epoch = epoch;
            stale = 0;
        } else if (train_cfg.patience > 0 && ++stale >= train_cfg.patience) {
            result.stopped_early = true;
            break;
        }
    }
    result.test = evaluate(result.best_params, model_cfg, split.test);
    return result;
}

}  // namespace tdf
