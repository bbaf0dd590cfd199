#pragma once

#include <cstddef>
#include <string>

#include "tdformer/matrix.hpp"

namespace tdf {

/// Score activation σ(·) applied to the query–key score matrix.
struct Activation {
    enum class Kind { identity, softmax, polynomial };

    Kind kind = Kind::softmax;
    int degree = 1;  // polynomial only

    static Activation identity() { return {Kind::identity, 1}; }
    static Activation softmax() { return {Kind::softmax, 1}; }
    static Activation polynomial(int degree);

    /// "identity", "softmax" or "poly:D".
    static Activation parse(const std::string& text);
    std::string to_string() const;

    friend bool operator==(const Activation&, const Activation&) = default;
};

/// Lower bound applied to Fourier score moduli before the polynomial kernel.
inline constexpr double kPolyScoreFloor = 1e-12;

struct AttentionDomain {
    enum class Kind { time, fourier, wavelet };

    Kind kind = Kind::fourier;
    std::size_t levels = 1;  // wavelet only

    static AttentionDomain time() { return {Kind::time, 1}; }
    static AttentionDomain fourier() { return {Kind::fourier, 1}; }
    static AttentionDomain wavelet(std::size_t levels);

    /// "time", "fourier", "wavelet" (levels supplied separately) or "wavelet:N".
    static AttentionDomain parse(const std::string& text, std::size_t default_levels = 3);
    std::string to_string() const;

    friend bool operator==(const AttentionDomain&, const AttentionDomain&) = default;
};

/// σ(q·kᵀ/√D)·v. The identity activation skips the √D divisor.
RealMatrix time_attention(const RealMatrix& q, const RealMatrix& k, const RealMatrix& v,
                          Activation act);

/// idft(σ(dft(q)·conj(dft(k))ᵀ/√D)·dft(v)). Non-identity activations act on
/// the modulus of the complex scores; identity keeps the complex scores.
RealMatrix fourier_attention(const RealMatrix& q, const RealMatrix& k, const RealMatrix& v,
                             Activation act);

/// idwt(σ(dwt(q)·dwt(k)ᵀ/√D)·dwt(v)) over a Haar basis with `levels` levels.
RealMatrix wavelet_attention(const RealMatrix& q, const RealMatrix& k, const RealMatrix& v,
                             Activation act, std::size_t levels);

/// General form: q may have a different row count from k and v (which must
/// match each other). All three share the column count.
RealMatrix attention(const RealMatrix& q, const RealMatrix& k, const RealMatrix& v,
                     AttentionDomain domain, Activation act);

/// Queries from `q_src`, keys and values from `kv_src`.
RealMatrix cross_attention(const RealMatrix& q_src, const RealMatrix& kv_src,
                           AttentionDomain domain, Activation act);

/// Post-activation score matrix (modulus for Fourier scores).
RealMatrix attention_scores(const RealMatrix& q, const RealMatrix& k, AttentionDomain domain,
                            Activation act);

}  // namespace tdf
