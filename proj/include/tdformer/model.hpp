#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdformer/attention.hpp"
#include "tdformer/autodiff.hpp"
#include "tdformer/decomposition.hpp"
#include "tdformer/matrix.hpp"

namespace tdf {

enum class TrendBranch { mlp, time_attention };

/// Which branches the forward pass runs. `full` is the decomposed model;
/// the single-branch layouts feed the raw context straight into one branch
/// and back the standalone attention / MLP baselines of the synthetic studies.
enum class Layout { full, trend_only, seasonal_only };

std::string to_string(TrendBranch b);
std::string to_string(Layout l);
TrendBranch parse_trend_branch(const std::string& text);
Layout parse_layout(const std::string& text);

struct ModelConfig {
    std::size_t context = 96;
    std::size_t horizon = 96;
    std::size_t channels = 1;
    std::size_t d_model = 32;
    std::size_t d_ff = 64;
    std::size_t enc_layers = 2;
    std::size_t dec_layers = 1;
    std::vector<std::size_t> kernels{5, 13, 25};
    AttentionDomain seasonal_domain = AttentionDomain::fourier();
    Activation seasonal_activation = Activation::softmax();
    TrendBranch trend_branch = TrendBranch::mlp;
    bool revin = true;
    /// Adds fixed sinusoidal position codes after every embedding.
    bool positional = false;
    Layout layout = Layout::full;
    /// Hidden width of the trend MLP; 0 means 2·context.
    std::size_t mlp_hidden = 0;
    std::uint64_t seed = 0;

    std::size_t hidden_width() const { return mlp_hidden == 0 ? 2 * context : mlp_hidden; }
    bool uses_trend_branch() const { return layout != Layout::seasonal_only; }
    bool uses_seasonal_branch() const { return layout != Layout::trend_only; }

    /// Throws Error(config) naming the violated constraint.
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Parameters. Templated on the block type so the same layout can hold values
// (RealMatrix), gradients (RealMatrix) or tape handles (ad::Var).
// ---------------------------------------------------------------------------

/// Row-applied affine map y = x·weight + bias; weight is in×out, bias 1×out.
template <class T>
struct LinearT {
    T weight;
    T bias;
};

template <class T>
struct LayerNormT {
    T gain;
    T bias;
};

template <class T>
struct AttentionT {
    LinearT<T> query, key, value, output;
};

template <class T>
struct FeedForwardT {
    LinearT<T> expand, contract;
};

template <class T>
struct EncoderLayerT {
    AttentionT<T> self_attn;
    FeedForwardT<T> ff;
    LayerNormT<T> norm1, norm2;
};

template <class T>
struct DecoderLayerT {
    AttentionT<T> self_attn, cross_attn;
    FeedForwardT<T> ff;
    LayerNormT<T> norm1, norm2, norm3;
};

/// Embedding, encoder stack, decoder stack and output projection.
template <class T>
struct TransformerT {
    LinearT<T> embedding;
    std::vector<EncoderLayerT<T>> encoder;
    std::vector<DecoderLayerT<T>> decoder;
    LinearT<T> projection;
};

/// Time-axis layer of the trend MLP: y = weight·z + bias·1ᵀ with weight
/// out×in and bias out×1, so each channel column is mapped independently.
template <class T>
struct TimeLinearT {
    T weight;
    T bias;
};

template <class T>
struct MlpT {
    TimeLinearT<T> layer1, layer2, layer3;
};

template <class T>
struct MixerT {
    T weight;  // D_in × K
    T bias;    // 1 × K
};

template <class T>
struct RevinT {
    T gamma;  // 1 × D_in
    T beta;   // 1 × D_in
};

template <class T>
struct TDformerParamsT {
    MixerT<T> mixer;
    RevinT<T> revin;
    MlpT<T> mlp;
    TransformerT<T> trend_attention;
    TransformerT<T> seasonal;
};

using EncoderLayerParams = EncoderLayerT<RealMatrix>;
using DecoderLayerParams = DecoderLayerT<RealMatrix>;
using MLPParams = MlpT<RealMatrix>;
using TDformerParams = TDformerParamsT<RealMatrix>;
/// Gradient blocks mirror the parameter layout one-to-one.
using GradientSet = TDformerParamsT<RealMatrix>;
using BoundParams = TDformerParamsT<ad::Var>;

namespace detail {

template <class L, class F>
void visit_pair(L& p, const std::string& name, F& f) {
    f(name + ".weight", p.weight);
    f(name + ".bias", p.bias);
}

template <class A, class F>
void visit_attention(A& a, const std::string& name, F& f) {
    visit_pair(a.query, name + ".query", f);
    visit_pair(a.key, name + ".key", f);
    visit_pair(a.value, name + ".value", f);
    visit_pair(a.output, name + ".output", f);
}

template <class N, class F>
void visit_norm(N& n, const std::string& name, F& f) {
    f(name + ".gain", n.gain);
    f(name + ".bias", n.bias);
}

template <class X, class F>
void visit_transformer(X& t, const std::string& name, F& f) {
    visit_pair(t.embedding, name + ".embedding", f);
    for (std::size_t i = 0; i < t.encoder.size(); ++i) {
        const std::string n = name + ".encoder." + std::to_string(i);
        visit_attention(t.encoder[i].self_attn, n + ".self_attn", f);
        visit_pair(t.encoder[i].ff.expand, n + ".ff.expand", f);
        visit_pair(t.encoder[i].ff.contract, n + ".ff.contract", f);
        visit_norm(t.encoder[i].norm1, n + ".norm1", f);
        visit_norm(t.encoder[i].norm2, n + ".norm2", f);
    }
    for (std::size_t i = 0; i < t.decoder.size(); ++i) {
        const std::string n = name + ".decoder." + std::to_string(i);
        visit_attention(t.decoder[i].self_attn, n + ".self_attn", f);
        visit_attention(t.decoder[i].cross_attn, n + ".cross_attn", f);
        visit_pair(t.decoder[i].ff.expand, n + ".ff.expand", f);
        visit_pair(t.decoder[i].ff.contract, n + ".ff.contract", f);
        visit_norm(t.decoder[i].norm1, n + ".norm1", f);
        visit_norm(t.decoder[i].norm2, n + ".norm2", f);
        visit_norm(t.decoder[i].norm3, n + ".norm3", f);
    }
    visit_pair(t.projection, name + ".projection", f);
}

}  // namespace detail

/// Visits every block in the fixed traversal order used by checkpoints,
/// gradients and the optimizer: mixer, revin, mlp, trend_attention, seasonal.
template <class P, class F>
void for_each_block(P& params, F&& f) {
    f(std::string("mixer.weight"), params.mixer.weight);
    f(std::string("mixer.bias"), params.mixer.bias);
    f(std::string("revin.gamma"), params.revin.gamma);
    f(std::string("revin.beta"), params.revin.beta);
    detail::visit_pair(params.mlp.layer1, "mlp.layer1", f);
    detail::visit_pair(params.mlp.layer2, "mlp.layer2", f);
    detail::visit_pair(params.mlp.layer3, "mlp.layer3", f);
    detail::visit_transformer(params.trend_attention, "trend_attention", f);
    detail::visit_transformer(params.seasonal, "seasonal", f);
}

/// Resizes the layer vectors of `dst` to match `src`.
template <class U, class T>
void match_layout(TDformerParamsT<U>& dst, const TDformerParamsT<T>& src) {
    dst.trend_attention.encoder.resize(src.trend_attention.encoder.size());
    dst.trend_attention.decoder.resize(src.trend_attention.decoder.size());
    dst.seasonal.encoder.resize(src.seasonal.encoder.size());
    dst.seasonal.decoder.resize(src.seasonal.decoder.size());
}

template <class T>
std::vector<T*> block_pointers(TDformerParamsT<T>& p) {
    std::vector<T*> out;
    for_each_block(p, [&](const std::string&, T& b) { out.push_back(&b); });
    return out;
}

template <class T>
std::vector<const T*> block_pointers(const TDformerParamsT<T>& p) {
    std::vector<const T*> out;
    for_each_block(p, [&](const std::string&, const T& b) { out.push_back(&b); });
    return out;
}

std::vector<std::string> block_names(const TDformerParams& p);

/// Uniform(±1/√fan_in) weights and biases, unit norm gains, identity RevIN
/// affine. Draw order follows the block traversal.
TDformerParams init_params(const ModelConfig& cfg, std::uint64_t seed);

/// Zero blocks with the same shapes as `p`.
TDformerParams zeros_like(const TDformerParams& p);

std::size_t parameter_count(const TDformerParams& p);
/// Closed form used to cross-check init_params.
std::size_t parameter_count(const ModelConfig& cfg);

/// Registers every block as a trainable leaf on `tape`.
BoundParams bind_parameters(ad::Tape& tape, const TDformerParams& p);
/// Registers every block as a constant.
BoundParams bind_constants(ad::Tape& tape, const TDformerParams& p);
/// Reads the gradient of every bound block after tape.backward().
GradientSet collect_gradients(const ad::Tape& tape, const BoundParams& bound,
                              const TDformerParams& like);

// ---------------------------------------------------------------------------
// RevIN
// ---------------------------------------------------------------------------

inline constexpr double kRevinEps = 1e-5;

struct RevINState {
    RealMatrix mean;    // 1 × D
    RealMatrix stddev;  // 1 × D, floored at kRevinEps
    RealMatrix gamma;   // 1 × D
    RealMatrix beta;    // 1 × D
    std::vector<bool> clamped;  // channels whose stddev hit the floor
};

RealMatrix revin_normalize(const RealMatrix& x, const RealMatrix& gamma, const RealMatrix& beta,
                           RevINState& state);
RealMatrix revin_normalize(const RealMatrix& x, RevINState& state);  // identity affine
RealMatrix revin_denormalize(const RealMatrix& y, const RevINState& state);

/// rows × width table of sin/cos position codes.
RealMatrix positional_encoding(std::size_t rows, std::size_t width);

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

/// Tape-level building blocks, shared by training and the plain entry points.
namespace graph {

struct Branches {
    ad::Var trend;     // H × D_in
    ad::Var seasonal;  // H × D_in
    ad::Var total;     // H × D_in
    bool has_trend = false;
    bool has_seasonal = false;
};

ad::Var attend(ad::Var q, ad::Var k, ad::Var v, AttentionDomain domain, Activation act);
ad::Var encoder(ad::Var x, std::span<const EncoderLayerT<ad::Var>> layers,
                AttentionDomain domain, Activation act);
ad::Var decoder(ad::Var x, ad::Var enc_out, std::span<const DecoderLayerT<ad::Var>> layers,
                AttentionDomain domain, Activation act);
/// Embed → encoder → zero-padded decoder → projection; returns the last
/// `horizon` rows.
ad::Var transformer(ad::Var x, const TransformerT<ad::Var>& p, std::size_t horizon,
                    AttentionDomain domain, Activation act, bool positional = false);
ad::Var mlp(ad::Var z, const MlpT<ad::Var>& p);
ad::Var trend_branch(ad::Var x_trend, const BoundParams& p, const ModelConfig& cfg);
Branches forward(ad::Var context, const BoundParams& p, const ModelConfig& cfg);

}  // namespace graph

/// RevIN → three-layer MLP over time → RevIN⁻¹, per channel (or the
/// time-attention trend branch when cfg.trend_branch says so).
RealMatrix trend_forecast(const RealMatrix& x_trend, const TDformerParams& params,
                          const ModelConfig& cfg);

RealMatrix encoder_forward(const RealMatrix& x_emb, std::span<const EncoderLayerParams> layers,
                           const ModelConfig& cfg);

RealMatrix decoder_forward(const RealMatrix& x_dec_emb, const RealMatrix& enc_out,
                           std::span<const DecoderLayerParams> layers, const ModelConfig& cfg);

struct ForwardResult {
    RealMatrix trend;     // zeros when the layout has no trend branch
    RealMatrix seasonal;  // zeros when the layout has no seasonal branch
    RealMatrix total;
};

ForwardResult tdformer_forward_parts(const RealMatrix& context, const TDformerParams& params,
                                     const ModelConfig& cfg);
RealMatrix tdformer_forward(const RealMatrix& context, const TDformerParams& params,
                            const ModelConfig& cfg);

}  // namespace tdf
