#include "tdformer/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include <Eigen/Dense>

namespace tdf {

namespace {

template <class T>
using RowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
Eigen::Map<const RowMajor<T>> view(const Matrix<T>& m) {
    return {m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

template <class T>
Eigen::Map<RowMajor<T>> view(Matrix<T>& m) {
    return {m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

void check_inner(std::size_t a, std::size_t b, const char* op) {
    if (a != b) {
        throw Error(ErrorKind::shape, std::string(op) + ": inner dimensions differ (" +
                                          std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

constexpr double kImagWarnThreshold = 1e-6;

}  // namespace

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_size: return "invalid-size";
        case ErrorKind::invalid_level: return "invalid-level";
        case ErrorKind::invalid_kernel: return "invalid-kernel";
        case ErrorKind::invalid_period: return "invalid-period";
        case ErrorKind::shape: return "shape";
        case ErrorKind::domain: return "domain";
        case ErrorKind::config: return "config";
        case ErrorKind::parse: return "parse";
        case ErrorKind::io: return "io";
        case ErrorKind::numeric: return "numeric";
    }
    return "unknown";
}

RealMatrix matmul(const RealMatrix& a, const RealMatrix& b) {
    check_inner(a.cols(), b.rows(), "matmul");
    RealMatrix out(a.rows(), b.cols());
    if (a.cols() == 0) return out;
    view(out).noalias() = view(a) * view(b);
    return out;
}

RealMatrix matmul_nt(const RealMatrix& a, const RealMatrix& b) {
    check_inner(a.cols(), b.cols(), "matmul_nt");
    RealMatrix out(a.rows(), b.rows());
    if (a.cols() == 0) return out;
    view(out).noalias() = view(a) * view(b).transpose();
    return out;
}

RealMatrix matmul_tn(const RealMatrix& a, const RealMatrix& b) {
    check_inner(a.rows(), b.rows(), "matmul_tn");
    RealMatrix out(a.cols(), b.cols());
    if (a.rows() == 0) return out;
    view(out).noalias() = view(a).transpose() * view(b);
    return out;
}

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
    check_inner(a.cols(), b.rows(), "matmul");
    ComplexMatrix out(a.rows(), b.cols());
    if (a.cols() == 0) return out;
    view(out).noalias() = view(a) * view(b);
    return out;
}

RealMatrix transpose(const RealMatrix& a) {
    RealMatrix out(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
    return out;
}

ComplexMatrix transpose(const ComplexMatrix& a) {
    ComplexMatrix out(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
    return out;
}

ComplexMatrix conj_transpose(const ComplexMatrix& a) {
    ComplexMatrix out(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = std::conj(a(r, c));
    return out;
}

RealMatrix operator+(const RealMatrix& a, const RealMatrix& b) {
    require_same_shape(a, b, "add");
    RealMatrix out = a;
    out += b;
    return out;
}

RealMatrix operator-(const RealMatrix& a, const RealMatrix& b) {
    require_same_shape(a, b, "sub");
    RealMatrix out = a;
    auto o = out.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
    return out;
}

RealMatrix operator*(double s, const RealMatrix& a) {
    RealMatrix out = a;
    for (double& v : out.values()) v *= s;
    return out;
}

RealMatrix& operator+=(RealMatrix& a, const RealMatrix& b) {
    require_same_shape(a, b, "add");
    auto o = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
    return a;
}

ComplexMatrix to_complex(const RealMatrix& a) {
    ComplexMatrix out(a.rows(), a.cols());
    auto src = a.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = Complex(src[i], 0.0);
    return out;
}

RealMatrix real_part(const ComplexMatrix& a) {
    RealMatrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = a.values()[i].real();
    return out;
}

RealMatrix imag_part(const ComplexMatrix& a) {
    RealMatrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = a.values()[i].imag();
    return out;
}

RealMatrix modulus(const ComplexMatrix& a) {
    RealMatrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = std::abs(a.values()[i]);
    return out;
}

double max_abs(const RealMatrix& a) {
    double m = 0.0;
    for (double v : a.values()) m = std::max(m, std::abs(v));
    return m;
}

double max_abs(const ComplexMatrix& a) {
    double m = 0.0;
    for (const Complex& v : a.values()) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(const RealMatrix& a, const RealMatrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (!a.same_shape(b)) {
        throw Error(ErrorKind::shape, "max_abs_diff: shape mismatch " + a.shape_string() + " vs " +
                                          b.shape_string());
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

double frobenius_norm(const RealMatrix& a) {
    double s = 0.0;
    for (double v : a.values()) s += v * v;
    return std::sqrt(s);
}

double frobenius_norm(const ComplexMatrix& a) {
    double s = 0.0;
    for (const Complex& v : a.values()) s += std::norm(v);
    return std::sqrt(s);
}

bool all_finite(const RealMatrix& a) {
    return std::all_of(a.values().begin(), a.values().end(),
                       [](double v) { return std::isfinite(v); });
}

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

std::size_t log2_exact(std::size_t n) {
    if (!is_power_of_two(n)) {
        throw Error(ErrorKind::invalid_size, "length " + std::to_string(n) + " is not a power of two");
    }
    std::size_t k = 0;
    while ((std::size_t{1} << k) < n) ++k;
    return k;
}

// ---------------------------------------------------------------------------
// Fourier
// ---------------------------------------------------------------------------

namespace {

// e^{sign·2πi·m/L} for m in [0, L). Reducing the exponent mod L before
// evaluating keeps every twiddle accurate to a couple of ulps.
std::vector<Complex> roots_of_unity(std::size_t length, bool inverse) {
    std::vector<Complex> w(length);
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t m = 0; m < length; ++m) {
        const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(m) /
                             static_cast<double>(length);
        w[m] = Complex(std::cos(angle), std::sin(angle));
    }
    return w;
}

void bit_reverse(std::vector<Complex>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
}

// Iterative decimation-in-time radix-2 butterfly, unnormalised.
void fft_radix2(std::vector<Complex>& a, const std::vector<Complex>& roots) {
    const std::size_t n = a.size();
    bit_reverse(a);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = n / len;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const Complex t = roots[k * stride] * a[start + k + half];
                const Complex u = a[start + k];
                a[start + k] = u + t;
                a[start + k + half] = u - t;
            }
        }
    }
}

}  // namespace

ComplexMatrix fourier_matrix(std::size_t length) {
    if (length == 0) throw Error(ErrorKind::invalid_size, "fourier_matrix: length must be >= 1");
    const auto roots = roots_of_unity(length, false);
    const double norm = 1.0 / std::sqrt(static_cast<double>(length));
    ComplexMatrix w(length, length);
    for (std::size_t j = 0; j < length; ++j)
        for (std::size_t k = 0; k < length; ++k) w(j, k) = roots[(j * k) % length] * norm;
    return w;
}

namespace {

// Real and imaginary parts of the normalised forward kernel, W = cos + i·sin_neg.
struct FourierKernel {
    RealMatrix cos;
    RealMatrix sin_neg;
};

// Kernels for the lengths seen so far, shared across calls.
std::shared_ptr<const FourierKernel> cached_kernel(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::shared_ptr<const FourierKernel>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) {
        const auto roots = roots_of_unity(n, false);
        const double norm = 1.0 / std::sqrt(static_cast<double>(n));
        auto k = std::make_shared<FourierKernel>(FourierKernel{RealMatrix(n, n), RealMatrix(n, n)});
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t t = 0; t < n; ++t) {
                const Complex w = roots[(j * t) % n];
                k->cos(j, t) = w.real() * norm;
                k->sin_neg(j, t) = w.imag() * norm;
            }
        }
        slot = std::move(k);
    }
    return slot;
}

}  // namespace

ComplexMatrix fourier_transform_direct(const ComplexMatrix& x, bool inverse) {
    const std::size_t n = x.rows();
    if (n == 0 || x.cols() == 0) return ComplexMatrix(n, x.cols());
    const auto k = cached_kernel(n);
    const RealMatrix xr = real_part(x);
    const RealMatrix xi = imag_part(x);
    // The inverse kernel is the conjugate: cos − i·sin_neg.
    const double s = inverse ? -1.0 : 1.0;
    const RealMatrix re = matmul(k->cos, xr) - s * matmul(k->sin_neg, xi);
    const RealMatrix im = matmul(k->cos, xi) + s * matmul(k->sin_neg, xr);
    ComplexMatrix out(n, x.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = Complex(re.values()[i], im.values()[i]);
    return out;
}

std::pair<RealMatrix, RealMatrix> dft_parts(const RealMatrix& x) {
    if (is_power_of_two(x.rows()) || x.rows() == 0 || x.cols() == 0) {
        const ComplexMatrix f = dft(x);
        return {real_part(f), imag_part(f)};
    }
    const auto k = cached_kernel(x.rows());
    return {matmul(k->cos, x), matmul(k->sin_neg, x)};
}

RealMatrix idft_real(const RealMatrix& re, const RealMatrix& im) {
    if (!re.same_shape(im)) {
        throw Error(ErrorKind::shape, "idft_real: parts " + re.shape_string() + " and " + im.shape_string() +
                                          " differ");
    }
    if (is_power_of_two(re.rows()) || re.rows() == 0 || re.cols() == 0) {
        ComplexMatrix spec(re.rows(), re.cols());
        for (std::size_t i = 0; i < spec.size(); ++i) spec.values()[i] = Complex(re.values()[i], im.values()[i]);
        return real_part(fourier_transform(spec, true));
    }
    const auto k = cached_kernel(re.rows());
    return matmul(k->cos, re) + matmul(k->sin_neg, im);
}

ComplexMatrix fourier_transform(const ComplexMatrix& x, bool inverse) {
    const std::size_t n = x.rows();
    if (!is_power_of_two(n)) return fourier_transform_direct(x, inverse);

    const auto roots = roots_of_unity(n, inverse);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    ComplexMatrix out(n, x.cols());
    std::vector<Complex> buf(n);
    for (std::size_t c = 0; c < x.cols(); ++c) {
        for (std::size_t t = 0; t < n; ++t) buf[t] = x(t, c);
        fft_radix2(buf, roots);
        for (std::size_t t = 0; t < n; ++t) out(t, c) = buf[t] * norm;
    }
    return out;
}

ComplexMatrix dft(const RealMatrix& x) { return fourier_transform(to_complex(x), false); }

RealMatrix idft(const ComplexMatrix& spectrum, IdftDiagnostics* diag) {
    const ComplexMatrix time = fourier_transform(spectrum, true);
    double residual = 0.0;
    for (const Complex& v : time.values()) residual = std::max(residual, std::abs(v.imag()));
    const bool warn = residual > kImagWarnThreshold;
    if (diag != nullptr) {
        diag->max_residual_imag = residual;
        diag->warned = warn;
    } else if (warn) {
        std::cerr << "warning: idft discarded imaginary residual of magnitude " << residual << "\n";
    }
    return real_part(time);
}

// ---------------------------------------------------------------------------
// Haar wavelet
// ---------------------------------------------------------------------------

WaveletBasis::WaveletBasis(std::size_t length, std::size_t levels)
    : length_(length), levels_(levels), analysis_(RealMatrix::identity(length)) {
    if (!is_power_of_two(length)) {
        throw Error(ErrorKind::invalid_size,
                    "wavelet basis length " + std::to_string(length) + " is not a power of two");
    }
    const std::size_t max_levels = log2_exact(length);
    if (levels < 1 || levels > max_levels) {
        throw Error(ErrorKind::invalid_level, "wavelet levels " + std::to_string(levels) +
                                                  " outside [1, " + std::to_string(max_levels) +
                                                  "] for length " + std::to_string(length));
    }

    // Each level replaces the leading `block` rows (the current approximation
    // band) with their one-step Haar split.
    const double h = 1.0 / std::sqrt(2.0);
    std::size_t block = length;
    for (std::size_t level = 0; level < levels; ++level) {
        const std::size_t half = block / 2;
        RealMatrix next = analysis_;
        for (std::size_t i = 0; i < half; ++i) {
            for (std::size_t c = 0; c < length; ++c) {
                const double a = analysis_(2 * i, c);
                const double b = analysis_(2 * i + 1, c);
                next(i, c) = h * (a + b);
                next(half + i, c) = h * (a - b);
            }
        }
        analysis_ = std::move(next);
        block = half;
    }
}

WaveletBasis wavelet_basis(std::size_t length, std::size_t levels) {
    return WaveletBasis(length, levels);
}

RealMatrix dwt(const RealMatrix& x, const WaveletBasis& basis) {
    if (x.rows() != basis.length()) {
        throw Error(ErrorKind::shape, "dwt: signal has " + std::to_string(x.rows()) +
                                          " rows, basis expects " + std::to_string(basis.length()));
    }
    return matmul(basis.analysis_matrix(), x);
}

RealMatrix idwt(const RealMatrix& coeffs, const WaveletBasis& basis) {
    if (coeffs.rows() != basis.length()) {
        throw Error(ErrorKind::shape, "idwt: coefficients have " + std::to_string(coeffs.rows()) +
                                          " rows, basis expects " + std::to_string(basis.length()));
    }
    return matmul_tn(basis.analysis_matrix(), coeffs);
}

// ---------------------------------------------------------------------------
// Row normalisation
// ---------------------------------------------------------------------------

RealMatrix softmax_rows(const RealMatrix& s) {
    RealMatrix out(s.rows(), s.cols());
    for (std::size_t r = 0; r < s.rows(); ++r) {
        auto in = s.row(r);
        auto dst = out.row(r);
        if (in.empty()) continue;
        const double peak = *std::max_element(in.begin(), in.end());
        double total = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            dst[c] = std::exp(in[c] - peak);
            total += dst[c];
        }
        for (double& v : dst) v /= total;
    }
    return out;
}

RealMatrix poly_norm_rows(const RealMatrix& s, int degree) {
    if (degree < 1) {
        throw Error(ErrorKind::domain, "poly_norm_rows: degree must be >= 1, got " +
                                           std::to_string(degree));
    }
    RealMatrix out(s.rows(), s.cols());
    for (std::size_t r = 0; r < s.rows(); ++r) {
        auto in = s.row(r);
        auto dst = out.row(r);
        if (in.empty()) continue;
        // Normalise by the row maximum first so large degrees cannot overflow.
        const double peak = *std::max_element(in.begin(), in.end());
        double total = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            if (!(in[c] > 0.0)) {
                throw Error(ErrorKind::domain, "poly_norm_rows: entry (" + std::to_string(r) + "," +
                                                   std::to_string(c) + ") is not strictly positive");
            }
            dst[c] = std::pow(in[c] / peak, degree);
            total += dst[c];
        }
        for (double& v : dst) v /= total;
    }
    return out;
}

}  // namespace tdf
