#include "tdformer/attention.hpp"

#include <algorithm>
#include <cmath>

#include "tdformer/numerics.hpp"

namespace tdf {

Activation Activation::polynomial(int degree) {
    if (degree < 1) {
        throw Error(ErrorKind::config, "polynomial activation degree must be >= 1, got " +
                                           std::to_string(degree));
    }
    return {Kind::polynomial, degree};
}

Activation Activation::parse(const std::string& text) {
    if (text == "identity") return identity();
    if (text == "softmax") return softmax();
    if (text.rfind("poly:", 0) == 0) {
        try {
            std::size_t used = 0;
            const int d = std::stoi(text.substr(5), &used);
            if (used == text.size() - 5) return polynomial(d);
        } catch (const std::logic_error&) {
        }
    }
    throw Error(ErrorKind::config, "unknown activation '" + text +
                                       "' (expected identity, softmax or poly:D)");
}

std::string Activation::to_string() const {
    switch (kind) {
        case Kind::identity: return "identity";
        case Kind::softmax: return "softmax";
        case Kind::polynomial: return "poly:" + std::to_string(degree);
    }
    return "?";
}

AttentionDomain AttentionDomain::wavelet(std::size_t levels) {
    if (levels < 1) throw Error(ErrorKind::config, "wavelet levels must be >= 1");
    return {Kind::wavelet, levels};
}

AttentionDomain AttentionDomain::parse(const std::string& text, std::size_t default_levels) {
    if (text == "time") return time();
    if (text == "fourier") return fourier();
    if (text == "wavelet") return wavelet(default_levels);
    if (text.rfind("wavelet:", 0) == 0) {
        try {
            std::size_t used = 0;
            const long n = std::stol(text.substr(8), &used);
            if (used == text.size() - 8 && n > 0) return wavelet(static_cast<std::size_t>(n));
        } catch (const std::logic_error&) {
        }
    }
    throw Error(ErrorKind::config,
                "unknown attention domain '" + text + "' (expected time, fourier or wavelet)");
}

std::string AttentionDomain::to_string() const {
    switch (kind) {
        case Kind::time: return "time";
        case Kind::fourier: return "fourier";
        case Kind::wavelet: return "wavelet:" + std::to_string(levels);
    }
    return "?";
}

namespace {

void check_qkv(const RealMatrix& q, const RealMatrix& k, const RealMatrix& v) {
    if (!k.same_shape(v)) {
        throw Error(ErrorKind::shape,
                    "attention: keys " + k.shape_string() + " and values " + v.shape_string() +
                        " differ in shape");
    }
    if (q.cols() != k.cols()) {
        throw Error(ErrorKind::shape, "attention: queries have " + std::to_string(q.cols()) +
                                          " columns, keys have " + std::to_string(k.cols()));
    }
}

void check_self(const RealMatrix& q, const RealMatrix& k, const RealMatrix& v) {
    if (!q.same_shape(k) || !q.same_shape(v)) {
        throw Error(ErrorKind::shape, "self-attention: q " + q.shape_string() + ", k " +
                                          k.shape_string() + ", v " + v.shape_string() +
                                          " must share a shape");
    }
}

double score_scale(const RealMatrix& q, Activation act) {
    if (act.kind == Activation::Kind::identity || q.cols() == 0) return 1.0;
    return 1.0 / std::sqrt(static_cast<double>(q.cols()));
}

RealMatrix floor_for_poly(RealMatrix scores, Activation act) {
    if (act.kind == Activation::Kind::polynomial) {
        for (double& v : scores.values()) v = std::max(v, kPolyScoreFloor);
    }
    return scores;
}

RealMatrix activate(const RealMatrix& scores, Activation act) {
    switch (act.kind) {
        case Activation::Kind::identity: return scores;
        case Activation::Kind::softmax: return softmax_rows(scores);
        case Activation::Kind::polynomial: return poly_norm_rows(scores, act.degree);
    }
    return scores;
}

// Complex score matrix Q·conj(K)ᵀ.
ComplexMatrix complex_scores(const ComplexMatrix& qf, const ComplexMatrix& kf) {
    ComplexMatrix s(qf.rows(), kf.rows());
    for (std::size_t i = 0; i < qf.rows(); ++i) {
        for (std::size_t j = 0; j < kf.rows(); ++j) {
            Complex acc{};
            for (std::size_t d = 0; d < qf.cols(); ++d) acc += qf(i, d) * std::conj(kf(j, d));
            s(i, j) = acc;
        }
    }
    return s;
}

std::size_t checked_levels(std::size_t rows, std::size_t levels) {
    if (!is_power_of_two(rows)) {
        throw Error(ErrorKind::invalid_size, "wavelet attention: length " + std::to_string(rows) +
                                                 " is not a power of two");
    }
    return levels;
}

RealMatrix time_path(const RealMatrix& q, const RealMatrix& k, const RealMatrix& v,
                     Activation act) {
    RealMatrix scores = score_scale(q, act) * matmul_nt(q, k);
    return matmul(activate(scores, act), v);
}

RealMatrix fourier_path(const RealMatrix& q, const RealMatrix& k, const RealMatrix& v,
                        Activation act) {
    const ComplexMatrix qf = dft(q);
    const ComplexMatrix kf = dft(k);
    const ComplexMatrix vf = dft(v);
    const ComplexMatrix scores = complex_scores(qf, kf);
    ComplexMatrix mixed;
    if (act.kind == Activation::Kind::identity) {
        mixed = matmul(scores, vf);
    } else {
        const RealMatrix weights = activate(floor_for_poly(score_scale(q, act) * modulus(scores), act), act);
        mixed = matmul(to_complex(weights), vf);
    }
    IdftDiagnostics diag;
    return idft(mixed, &diag);
}

RealMatrix wavelet_path(const RealMatrix& q, const RealMatrix& k, const RealMatrix& v,
                        Activation act, std::size_t levels) {
    const WaveletBasis qb = wavelet_basis(q.rows(), checked_levels(q.rows(), levels));
    const WaveletBasis kb = wavelet_basis(k.rows(), checked_levels(k.rows(), levels));
    const RealMatrix qw = dwt(q, qb);
    const RealMatrix kw = dwt(k, kb);
    const RealMatrix vw = dwt(v, kb);
    RealMatrix scores = score_scale(q, act) * matmul_nt(qw, kw);
    return idwt(matmul(activate(scores, act), vw), qb);
}

}  // namespace

RealMatrix time_attention(const RealMatrix& q, const RealMatrix& k, const RealMatrix& v,
                          Activation act) {
    check_self(q, k, v);
    return time_path(q, k, v, act);
}

RealMatrix fourier_attention(const RealMatrix& q, const RealMatrix& k, const RealMatrix& v,
                             Activation act) {
    check_self(q, k, v);
    return fourier_path(q, k, v, act);
}

RealMatrix wavelet_attention(const RealMatrix& q, const RealMatrix& k, const RealMatrix& v,
                             Activation act, std::size_t levels) {
    check_self(q, k, v);
    return wavelet_path(q, k, v, act, levels);
}

RealMatrix attention(const RealMatrix& q, const RealMatrix& k, const RealMatrix& v,
                     AttentionDomain domain, Activation act) {
    check_qkv(q, k, v);
    switch (domain.kind) {
        case AttentionDomain::Kind::time: return time_path(q, k, v, act);
        case AttentionDomain::Kind::fourier: return fourier_path(q, k, v, act);
        case AttentionDomain::Kind::wavelet: return wavelet_path(q, k, v, act, domain.levels);
    }
    return {};
}

RealMatrix cross_attention(const RealMatrix& q_src, const RealMatrix& kv_src,
                           AttentionDomain domain, Activation act) {
    if (q_src.cols() != kv_src.cols()) {
        throw Error(ErrorKind::shape, "cross_attention: query source has " +
                                          std::to_string(q_src.cols()) +
                                          " columns, key/value source has " +
                                          std::to_string(kv_src.cols()));
    }
    return attention(q_src, kv_src, kv_src, domain, act);
}

RealMatrix attention_scores(const RealMatrix& q, const RealMatrix& k, AttentionDomain domain,
                            Activation act) {
    if (q.cols() != k.cols()) {
        throw Error(ErrorKind::shape, "attention_scores: column mismatch " + q.shape_string() +
                                          " vs " + k.shape_string());
    }
    const double scale = score_scale(q, act);
    switch (domain.kind) {
        case AttentionDomain::Kind::time:
            return activate(scale * matmul_nt(q, k), act);
        case AttentionDomain::Kind::fourier:
            return activate(floor_for_poly(scale * modulus(complex_scores(dft(q), dft(k))), act), act);
        case AttentionDomain::Kind::wavelet: {
            const WaveletBasis qb = wavelet_basis(q.rows(), checked_levels(q.rows(), domain.levels));
            const WaveletBasis kb = wavelet_basis(k.rows(), checked_levels(k.rows(), domain.levels));
            return activate(scale * matmul_nt(dwt(q, qb), dwt(k, kb)), act);
        }
    }
    return {};
}

}  // namespace tdf
