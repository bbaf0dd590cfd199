#include "tdformer/model.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <random>

#include "tdformer/numerics.hpp"

namespace tdf {

std::string to_string(TrendBranch b) { return b == TrendBranch::mlp ? "mlp" : "time-attn"; }

std::string to_string(Layout l) {
    switch (l) {
        case Layout::full: return "full";
        case Layout::trend_only: return "trend-only";
        case Layout::seasonal_only: return "seasonal-only";
    }
    return "?";
}

TrendBranch parse_trend_branch(const std::string& text) {
    if (text == "mlp") return TrendBranch::mlp;
    if (text == "time-attn") return TrendBranch::time_attention;
    throw Error(ErrorKind::config, "unknown trend branch '" + text + "' (expected mlp or time-attn)");
}

Layout parse_layout(const std::string& text) {
    if (text == "full") return Layout::full;
    if (text == "trend-only") return Layout::trend_only;
    if (text == "seasonal-only") return Layout::seasonal_only;
    throw Error(ErrorKind::config, "unknown layout '" + text +
                                       "' (expected full, trend-only or seasonal-only)");
}

void ModelConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::config, msg); };
    if (context == 0 || horizon == 0) fail("context and horizon must be positive");
    if (channels == 0) fail("channel count must be positive");
    if (d_model == 0 || d_ff == 0) fail("d_model and d_ff must be positive");
    if (uses_seasonal_branch() || trend_branch == TrendBranch::time_attention) {
        if (enc_layers < 1 || dec_layers < 1) fail("encoder and decoder layer counts must be >= 1");
    }
    if (layout == Layout::full) {
        if (kernels.empty()) fail("at least one decomposition kernel is required");
        for (std::size_t k : kernels) {
            if (k % 2 == 0 || k > context) {
                fail("decomposition kernel " + std::to_string(k) + " must be odd and <= context " +
                     std::to_string(context));
            }
        }
    }
    if (uses_seasonal_branch()) {
        if (seasonal_domain.kind == AttentionDomain::Kind::wavelet) {
            if (!is_power_of_two(context) || !is_power_of_two(context + horizon)) {
                fail("wavelet attention needs power-of-two lengths: context " +
                     std::to_string(context) + " and context+horizon " +
                     std::to_string(context + horizon));
            }
            if (seasonal_domain.levels > log2_exact(context)) {
                fail("wavelet levels " + std::to_string(seasonal_domain.levels) +
                     " exceed log2(context)");
            }
        }
        if (seasonal_activation.kind == Activation::Kind::polynomial &&
            seasonal_domain.kind != AttentionDomain::Kind::fourier) {
            fail("polynomial activation needs positive scores and is only supported with the "
                 "fourier domain");
        }
    }
}

nlohmann::json to_json(const ModelConfig& cfg) {
    return nlohmann::json{
        {"context", cfg.context},
        {"horizon", cfg.horizon},
        {"channels", cfg.channels},
        {"d_model", cfg.d_model},
        {"d_ff", cfg.d_ff},
        {"enc_layers", cfg.enc_layers},
        {"dec_layers", cfg.dec_layers},
        {"kernels", cfg.kernels},
        {"domain", cfg.seasonal_domain.to_string()},
        {"activation", cfg.seasonal_activation.to_string()},
        {"trend_branch", to_string(cfg.trend_branch)},
        {"revin", cfg.revin},
        {"positional", cfg.positional},
        {"layout", to_string(cfg.layout)},
        {"mlp_hidden", cfg.mlp_hidden},
        {"seed", cfg.seed},
    };
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    try {
        cfg.context = j.value("context", cfg.context);
        cfg.horizon = j.value("horizon", cfg.horizon);
        cfg.channels = j.value("channels", cfg.channels);
        cfg.d_model = j.value("d_model", cfg.d_model);
        cfg.d_ff = j.value("d_ff", cfg.d_ff);
        cfg.enc_layers = j.value("enc_layers", cfg.enc_layers);
        cfg.dec_layers = j.value("dec_layers", cfg.dec_layers);
        if (j.contains("kernels")) cfg.kernels = j.at("kernels").get<std::vector<std::size_t>>();
        if (j.contains("domain")) cfg.seasonal_domain = AttentionDomain::parse(j.at("domain"));
        if (j.contains("activation")) cfg.seasonal_activation = Activation::parse(j.at("activation"));
        if (j.contains("trend_branch")) cfg.trend_branch = parse_trend_branch(j.at("trend_branch"));
        cfg.revin = j.value("revin", cfg.revin);
        cfg.positional = j.value("positional", cfg.positional);
        if (j.contains("layout")) cfg.layout = parse_layout(j.at("layout"));
        cfg.mlp_hidden = j.value("mlp_hidden", cfg.mlp_hidden);
        cfg.seed = j.value("seed", cfg.seed);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::config, std::string("model config: ") + e.what());
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

namespace {

class Initializer {
public:
    explicit Initializer(std::uint64_t seed) : rng_(seed) {}

    RealMatrix uniform(std::size_t rows, std::size_t cols, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        RealMatrix m(rows, cols);
        for (double& v : m.values()) v = dist(rng_);
        return m;
    }

    LinearT<RealMatrix> linear(std::size_t in, std::size_t out) {
        LinearT<RealMatrix> l;
        l.weight = uniform(in, out, in);
        l.bias = uniform(1, out, in);
        return l;
    }

    TimeLinearT<RealMatrix> time_linear(std::size_t in, std::size_t out) {
        TimeLinearT<RealMatrix> l;
        l.weight = uniform(out, in, in);
        l.bias = uniform(out, 1, in);
        return l;
    }

    static LayerNormT<RealMatrix> norm(std::size_t width) {
        return {RealMatrix(1, width, 1.0), RealMatrix(1, width, 0.0)};
    }

    AttentionT<RealMatrix> attention(std::size_t d) {
        AttentionT<RealMatrix> a;
        a.query = linear(d, d);
        a.key = linear(d, d);
        a.value = linear(d, d);
        a.output = linear(d, d);
        return a;
    }

    TransformerT<RealMatrix> transformer(const ModelConfig& cfg) {
        TransformerT<RealMatrix> t;
        t.embedding = linear(cfg.channels, cfg.d_model);
        for (std::size_t i = 0; i < cfg.enc_layers; ++i) {
            EncoderLayerParams layer;
            layer.self_attn = attention(cfg.d_model);
            layer.ff.expand = linear(cfg.d_model, cfg.d_ff);
            layer.ff.contract = linear(cfg.d_ff, cfg.d_model);
            layer.norm1 = norm(cfg.d_model);
            layer.norm2 = norm(cfg.d_model);
            t.encoder.push_back(std::move(layer));
        }
        for (std::size_t i = 0; i < cfg.dec_layers; ++i) {
            DecoderLayerParams layer;
            layer.self_attn = attention(cfg.d_model);
            layer.cross_attn = attention(cfg.d_model);
            layer.ff.expand = linear(cfg.d_model, cfg.d_ff);
            layer.ff.contract = linear(cfg.d_ff, cfg.d_model);
            layer.norm1 = norm(cfg.d_model);
            layer.norm2 = norm(cfg.d_model);
            layer.norm3 = norm(cfg.d_model);
            t.decoder.push_back(std::move(layer));
        }
        t.projection = linear(cfg.d_model, cfg.channels);
        return t;
    }

private:
    std::mt19937_64 rng_;
};

std::size_t transformer_count(const ModelConfig& cfg) {
    const std::size_t d = cfg.d_model;
    const std::size_t attn = 4 * (d * d + d);
    const std::size_t ff = (d * cfg.d_ff + cfg.d_ff) + (cfg.d_ff * d + d);
    const std::size_t enc = attn + ff + 4 * d;
    const std::size_t dec = 2 * attn + ff + 6 * d;
    return (cfg.channels * d + d) + cfg.enc_layers * enc + cfg.dec_layers * dec +
           (d * cfg.channels + cfg.channels);
}

BoundParams bind_with(ad::Tape& tape, const TDformerParams& p, bool trainable) {
    BoundParams out;
    match_layout(out, p);
    auto src = block_pointers(p);
    auto dst = block_pointers(out);
    for (std::size_t i = 0; i < src.size(); ++i)
        *dst[i] = trainable ? tape.parameter(*src[i]) : tape.constant(*src[i]);
    return out;
}

std::shared_ptr<const RealMatrix> cached_wavelet(std::size_t length, std::size_t levels) {
    static std::mutex mutex;
    static std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const WaveletBasis>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{length, levels}];
    if (!slot) slot = std::make_shared<const WaveletBasis>(length, levels);
    return {slot, &slot->analysis_matrix()};
}

}  // namespace

std::vector<std::string> block_names(const TDformerParams& p) {
    std::vector<std::string> names;
    for_each_block(p, [&](const std::string& name, const RealMatrix&) { names.push_back(name); });
    return names;
}

TDformerParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Initializer init(seed);
    TDformerParams p;
    if (cfg.layout == Layout::full) {
        p.mixer.weight = init.uniform(cfg.channels, cfg.kernels.size(), cfg.channels);
        p.mixer.bias = init.uniform(1, cfg.kernels.size(), cfg.channels);
    }
    if (cfg.uses_trend_branch()) {
        if (cfg.revin) {
            p.revin.gamma = RealMatrix(1, cfg.channels, 1.0);
            p.revin.beta = RealMatrix(1, cfg.channels, 0.0);
        }
        if (cfg.trend_branch == TrendBranch::mlp) {
            const std::size_t hidden = cfg.hidden_width();
            p.mlp.layer1 = init.time_linear(cfg.context, hidden);
            p.mlp.layer2 = init.time_linear(hidden, hidden);
            p.mlp.layer3 = init.time_linear(hidden, cfg.horizon);
        } else {
            p.trend_attention = init.transformer(cfg);
        }
    }
    if (cfg.uses_seasonal_branch()) p.seasonal = init.transformer(cfg);
    return p;
}

TDformerParams zeros_like(const TDformerParams& p) {
    TDformerParams out;
    match_layout(out, p);
    auto src = block_pointers(p);
    auto dst = block_pointers(out);
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = RealMatrix(src[i]->rows(), src[i]->cols());
    return out;
}

std::size_t parameter_count(const TDformerParams& p) {
    std::size_t n = 0;
    for_each_block(p, [&](const std::string&, const RealMatrix& b) { n += b.size(); });
    return n;
}

std::size_t parameter_count(const ModelConfig& cfg) {
    std::size_t n = 0;
    if (cfg.layout == Layout::full) n += (cfg.channels + 1) * cfg.kernels.size();
    if (cfg.uses_trend_branch()) {
        if (cfg.revin) n += 2 * cfg.channels;
        if (cfg.trend_branch == TrendBranch::mlp) {
            const std::size_t h = cfg.hidden_width();
            n += (h * cfg.context + h) + (h * h + h) + (cfg.horizon * h + cfg.horizon);
        } else {
            n += transformer_count(cfg);
        }
    }
    if (cfg.uses_seasonal_branch()) n += transformer_count(cfg);
    return n;
}

BoundParams bind_parameters(ad::Tape& tape, const TDformerParams& p) {
    return bind_with(tape, p, true);
}

BoundParams bind_constants(ad::Tape& tape, const TDformerParams& p) {
    return bind_with(tape, p, false);
}

GradientSet collect_gradients(const ad::Tape& tape, const BoundParams& bound,
                              const TDformerParams& like) {
    GradientSet out;
    match_layout(out, like);
    auto src = block_pointers(bound);
    auto dst = block_pointers(out);
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = tape.grad(*src[i]);
    return out;
}

// ---------------------------------------------------------------------------
// RevIN
// ---------------------------------------------------------------------------

RealMatrix revin_normalize(const RealMatrix& x, const RealMatrix& gamma, const RealMatrix& beta,
                           RevINState& state) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    if (n == 0) throw Error(ErrorKind::shape, "revin_normalize: empty context");
    if (gamma.rows() != 1 || gamma.cols() != d || beta.rows() != 1 || beta.cols() != d) {
        throw Error(ErrorKind::shape, "revin_normalize: affine parameters do not match " +
                                          std::to_string(d) + " channels");
    }
    state.mean = RealMatrix(1, d);
    state.stddev = RealMatrix(1, d);
    state.gamma = gamma;
    state.beta = beta;
    state.clamped.assign(d, false);
    RealMatrix out(n, d);
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0.0;
        for (std::size_t t = 0; t < n; ++t) mean += x(t, c);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t t = 0; t < n; ++t) var += (x(t, c) - mean) * (x(t, c) - mean);
        var /= static_cast<double>(n);
        double sd = std::sqrt(var);
        if (!(sd > kRevinEps)) {
            sd = kRevinEps;
            state.clamped[c] = true;
        }
        state.mean(0, c) = mean;
        state.stddev(0, c) = sd;
        for (std::size_t t = 0; t < n; ++t)
            out(t, c) = (x(t, c) - mean) / sd * gamma(0, c) + beta(0, c);
    }
    return out;
}

RealMatrix revin_normalize(const RealMatrix& x, RevINState& state) {
    return revin_normalize(x, RealMatrix(1, x.cols(), 1.0), RealMatrix(1, x.cols(), 0.0), state);
}

RealMatrix revin_denormalize(const RealMatrix& y, const RevINState& state) {
    if (y.cols() != state.mean.cols()) {
        throw Error(ErrorKind::shape, "revin_denormalize: state has " +
                                          std::to_string(state.mean.cols()) + " channels, input has " +
                                          std::to_string(y.cols()));
    }
    RealMatrix out(y.rows(), y.cols());
    for (std::size_t t = 0; t < y.rows(); ++t) {
        for (std::size_t c = 0; c < y.cols(); ++c) {
            const double unscaled = (y(t, c) - state.beta(0, c)) / state.gamma(0, c);
            out(t, c) = unscaled * state.stddev(0, c) + state.mean(0, c);
        }
    }
    return out;
}

RealMatrix positional_encoding(std::size_t rows, std::size_t width) {
    RealMatrix pe(rows, width);
    for (std::size_t t = 0; t < rows; ++t) {
        for (std::size_t i = 0; i < width; ++i) {
            const double rate = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(width));
            const double angle = static_cast<double>(t) * rate;
            pe(t, i) = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

// ---------------------------------------------------------------------------
// Graph construction
// ---------------------------------------------------------------------------

namespace graph {

namespace {

ad::Var linear(ad::Var x, const LinearT<ad::Var>& p) {
    return ad::add_row(ad::matmul(x, p.weight), p.bias);
}

ad::Var time_linear(ad::Var z, const TimeLinearT<ad::Var>& p) {
    return ad::add_col(ad::matmul(p.weight, z), p.bias);
}

ad::Var activate(ad::Var scores, Activation act) {
    switch (act.kind) {
        case Activation::Kind::identity: return scores;
        case Activation::Kind::softmax: return ad::softmax_rows(scores);
        case Activation::Kind::polynomial: return ad::poly_norm_rows(scores, act.degree);
    }
    return scores;
}

ad::Var attention_block(ad::Var xq, ad::Var xkv, const AttentionT<ad::Var>& p,
                        AttentionDomain domain, Activation act) {
    const ad::Var q = linear(xq, p.query);
    const ad::Var k = linear(xkv, p.key);
    const ad::Var v = linear(xkv, p.value);
    return linear(attend(q, k, v, domain, act), p.output);
}

ad::Var feed_forward(ad::Var x, const FeedForwardT<ad::Var>& p) {
    return linear(ad::relu(linear(x, p.expand)), p.contract);
}

ad::Var norm(ad::Var x, const LayerNormT<ad::Var>& p) { return ad::layer_norm(x, p.gain, p.bias); }

struct RevinStats {
    ad::Var mean;
    ad::Var stddev;
};

ad::Var revin_in(ad::Var x, const RevinT<ad::Var>& p, RevinStats& stats) {
    stats.mean = ad::col_mean(x);
    const ad::Var centered = ad::sub_row(x, stats.mean);
    stats.stddev = ad::sqrt_floor(ad::col_mean(ad::square(centered)), kRevinEps);
    return ad::add_row(ad::mul_row(ad::div_row(centered, stats.stddev), p.gamma), p.beta);
}

ad::Var revin_out(ad::Var y, const RevinT<ad::Var>& p, const RevinStats& stats) {
    const ad::Var unscaled = ad::div_row(ad::sub_row(y, p.beta), p.gamma);
    return ad::add_row(ad::mul_row(unscaled, stats.stddev), stats.mean);
}

}  // namespace

ad::Var attend(ad::Var q, ad::Var k, ad::Var v, AttentionDomain domain, Activation act) {
    const bool linear_scores = act.kind == Activation::Kind::identity;
    const double s = linear_scores ? 1.0 : 1.0 / std::sqrt(static_cast<double>(q.cols()));
    switch (domain.kind) {
        case AttentionDomain::Kind::time: {
            ad::Var scores = ad::matmul_nt(q, k);
            if (!linear_scores) scores = ad::scale(scores, s);
            return ad::matmul(activate(scores, act), v);
        }
        case AttentionDomain::Kind::fourier: {
            const auto [qr, qi] = ad::dft_parts(q);
            const auto [kr, ki] = ad::dft_parts(k);
            const auto [vr, vi] = ad::dft_parts(v);
            // Q·conj(K)ᵀ split into real and imaginary parts.
            const ad::Var sr = ad::add(ad::matmul_nt(qr, kr), ad::matmul_nt(qi, ki));
            const ad::Var si = ad::sub(ad::matmul_nt(qi, kr), ad::matmul_nt(qr, ki));
            if (linear_scores) {
                const ad::Var orr = ad::sub(ad::matmul(sr, vr), ad::matmul(si, vi));
                const ad::Var oi = ad::add(ad::matmul(sr, vi), ad::matmul(si, vr));
                return ad::idft(orr, oi);
            }
            ad::Var scores = ad::scale(ad::modulus(sr, si), s);
            if (act.kind == Activation::Kind::polynomial) scores = ad::clamp_min(scores, kPolyScoreFloor);
            const ad::Var weights = activate(scores, act);
            return ad::idft(ad::matmul(weights, vr), ad::matmul(weights, vi));
        }
        case AttentionDomain::Kind::wavelet: {
            const auto qb = cached_wavelet(q.rows(), domain.levels);
            const auto kb = cached_wavelet(k.rows(), domain.levels);
            const ad::Var qw = ad::left_multiply(qb, q);
            const ad::Var kw = ad::left_multiply(kb, k);
            const ad::Var vw = ad::left_multiply(kb, v);
            ad::Var scores = ad::matmul_nt(qw, kw);
            if (!linear_scores) scores = ad::scale(scores, s);
            return ad::left_multiply_t(qb, ad::matmul(activate(scores, act), vw));
        }
    }
    return q;
}

ad::Var encoder(ad::Var x, std::span<const EncoderLayerT<ad::Var>> layers, AttentionDomain domain,
                Activation act) {
    for (const auto& layer : layers) {
        const ad::Var x1 =
            norm(ad::add(attention_block(x, x, layer.self_attn, domain, act), x), layer.norm1);
        x = norm(ad::add(feed_forward(x1, layer.ff), x1), layer.norm2);
    }
    return x;
}

ad::Var decoder(ad::Var x, ad::Var enc_out, std::span<const DecoderLayerT<ad::Var>> layers,
                AttentionDomain domain, Activation act) {
    for (const auto& layer : layers) {
        const ad::Var x1 =
            norm(ad::add(attention_block(x, x, layer.self_attn, domain, act), x), layer.norm1);
        const ad::Var x2 = norm(
            ad::add(attention_block(x1, enc_out, layer.cross_attn, domain, act), x1), layer.norm2);
        x = norm(ad::add(feed_forward(x2, layer.ff), x2), layer.norm3);
    }
    return x;
}

ad::Var transformer(ad::Var x, const TransformerT<ad::Var>& p, std::size_t horizon,
                    AttentionDomain domain, Activation act, bool positional) {
    ad::Tape& tape = x.tape();
    auto embed = [&](ad::Var in) {
        const ad::Var e = linear(in, p.embedding);
        return positional ? ad::add(e, tape.constant(positional_encoding(e.rows(), e.cols()))) : e;
    };
    const ad::Var enc = encoder(embed(x), p.encoder, domain, act);
    const ad::Var padded = ad::vstack(x, tape.constant(RealMatrix(horizon, x.cols())));
    const ad::Var dec = decoder(embed(padded), enc, p.decoder, domain, act);
    return ad::slice_rows(linear(dec, p.projection), x.rows(), horizon);
}

ad::Var mlp(ad::Var z, const MlpT<ad::Var>& p) {
    const ad::Var h1 = ad::relu(time_linear(z, p.layer1));
    const ad::Var h2 = ad::relu(time_linear(h1, p.layer2));
    return time_linear(h2, p.layer3);
}

ad::Var trend_branch(ad::Var x_trend, const BoundParams& p, const ModelConfig& cfg) {
    RevinStats stats;
    ad::Var z = cfg.revin ? revin_in(x_trend, p.revin, stats) : x_trend;
    ad::Var y = cfg.trend_branch == TrendBranch::mlp
                    ? mlp(z, p.mlp)
                    : transformer(z, p.trend_attention, cfg.horizon, AttentionDomain::time(),
                                  Activation::softmax(), cfg.positional);
    return cfg.revin ? revin_out(y, p.revin, stats) : y;
}

Branches forward(ad::Var context, const BoundParams& p, const ModelConfig& cfg) {
    if (context.rows() != cfg.context || context.cols() != cfg.channels) {
        throw Error(ErrorKind::shape, "forward: context " + context.value().shape_string() +
                                          " does not match config " + std::to_string(cfg.context) +
                                          "x" + std::to_string(cfg.channels));
    }
    Branches out;
    switch (cfg.layout) {
        case Layout::full: {
            const ad::Var logits = ad::add_row(ad::matmul(context, p.mixer.weight), p.mixer.bias);
            const ad::Var weights = ad::softmax_rows(logits);
            ad::Var trend;
            for (std::size_t i = 0; i < cfg.kernels.size(); ++i) {
                const ad::Var term = ad::mul_col(ad::moving_average(context, cfg.kernels[i]),
                                                 ad::slice_cols(weights, i, 1));
                trend = i == 0 ? term : ad::add(trend, term);
            }
            const ad::Var seasonal = ad::sub(context, trend);
            out.trend = trend_branch(trend, p, cfg);
            out.seasonal = transformer(seasonal, p.seasonal, cfg.horizon, cfg.seasonal_domain,
                                       cfg.seasonal_activation, cfg.positional);
            out.total = ad::add(out.trend, out.seasonal);
            out.has_trend = out.has_seasonal = true;
            break;
        }
        case Layout::trend_only:
            out.trend = trend_branch(context, p, cfg);
            out.total = out.trend;
            out.has_trend = true;
            break;
        case Layout::seasonal_only:
            out.seasonal = transformer(context, p.seasonal, cfg.horizon, cfg.seasonal_domain,
                                       cfg.seasonal_activation, cfg.positional);
            out.total = out.seasonal;
            out.has_seasonal = true;
            break;
    }
    return out;
}

}  // namespace graph

// ---------------------------------------------------------------------------
// Plain entry points
// ---------------------------------------------------------------------------

namespace {

TransformerT<ad::Var> bind_transformer(ad::Tape& tape, const TransformerT<RealMatrix>& src) {
    TransformerT<ad::Var> dst;
    dst.encoder.resize(src.encoder.size());
    dst.decoder.resize(src.decoder.size());
    std::vector<const RealMatrix*> from;
    std::vector<ad::Var*> to;
    auto collect_from = [&](const std::string&, const RealMatrix& m) { from.push_back(&m); };
    auto collect_to = [&](const std::string&, ad::Var& v) { to.push_back(&v); };
    detail::visit_transformer(src, "", collect_from);
    detail::visit_transformer(dst, "", collect_to);
    for (std::size_t i = 0; i < from.size(); ++i) *to[i] = tape.constant(*from[i]);
    return dst;
}

}  // namespace

RealMatrix trend_forecast(const RealMatrix& x_trend, const TDformerParams& params,
                          const ModelConfig& cfg) {
    if (x_trend.rows() != cfg.context || x_trend.cols() != cfg.channels) {
        throw Error(ErrorKind::shape, "trend_forecast: input " + x_trend.shape_string() +
                                          " does not match context " + std::to_string(cfg.context) +
                                          "x" + std::to_string(cfg.channels));
    }
    if (cfg.trend_branch == TrendBranch::mlp && params.mlp.layer1.weight.cols() != x_trend.rows()) {
        throw Error(ErrorKind::shape, "trend_forecast: MLP input width " +
                                          std::to_string(params.mlp.layer1.weight.cols()) +
                                          " differs from context length " +
                                          std::to_string(x_trend.rows()));
    }
    ad::Tape tape;
    const BoundParams bound = bind_constants(tape, params);
    return graph::trend_branch(tape.constant(x_trend), bound, cfg).value();
}

RealMatrix encoder_forward(const RealMatrix& x_emb, std::span<const EncoderLayerParams> layers,
                           const ModelConfig& cfg) {
    ad::Tape tape;
    TransformerT<RealMatrix> holder;
    holder.encoder.assign(layers.begin(), layers.end());
    const TransformerT<ad::Var> bound = bind_transformer(tape, holder);
    return graph::encoder(tape.constant(x_emb), bound.encoder, cfg.seasonal_domain,
                          cfg.seasonal_activation)
        .value();
}

RealMatrix decoder_forward(const RealMatrix& x_dec_emb, const RealMatrix& enc_out,
                           std::span<const DecoderLayerParams> layers, const ModelConfig& cfg) {
    ad::Tape tape;
    TransformerT<RealMatrix> holder;
    holder.decoder.assign(layers.begin(), layers.end());
    const TransformerT<ad::Var> bound = bind_transformer(tape, holder);
    return graph::decoder(tape.constant(x_dec_emb), tape.constant(enc_out), bound.decoder,
                          cfg.seasonal_domain, cfg.seasonal_activation)
        .value();
}

ForwardResult tdformer_forward_parts(const RealMatrix& context, const TDformerParams& params,
                                     const ModelConfig& cfg) {
    ad::Tape tape;
    const BoundParams bound = bind_constants(tape, params);
    const graph::Branches b = graph::forward(tape.constant(context), bound, cfg);
    ForwardResult out;
    const RealMatrix zeros(cfg.horizon, cfg.channels);
    out.trend = b.has_trend ? b.trend.value() : zeros;
    out.seasonal = b.has_seasonal ? b.seasonal.value() : zeros;
    out.total = b.total.value();
    return out;
}

RealMatrix tdformer_forward(const RealMatrix& context, const TDformerParams& params,
                            const ModelConfig& cfg) {
    return tdformer_forward_parts(context, params, cfg).total;
}

}  // namespace tdf
