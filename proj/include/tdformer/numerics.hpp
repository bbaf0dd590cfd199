#pragma once

#include <cstddef>
#include <utility>

#include "tdformer/matrix.hpp"

namespace tdf {

// ---------------------------------------------------------------------------
// Dense algebra
// ---------------------------------------------------------------------------

RealMatrix matmul(const RealMatrix& a, const RealMatrix& b);
/// a · bᵀ
RealMatrix matmul_nt(const RealMatrix& a, const RealMatrix& b);
/// aᵀ · b
RealMatrix matmul_tn(const RealMatrix& a, const RealMatrix& b);
ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);

RealMatrix transpose(const RealMatrix& a);
ComplexMatrix conj_transpose(const ComplexMatrix& a);
ComplexMatrix transpose(const ComplexMatrix& a);

RealMatrix operator+(const RealMatrix& a, const RealMatrix& b);
RealMatrix operator-(const RealMatrix& a, const RealMatrix& b);
RealMatrix operator*(double s, const RealMatrix& a);
RealMatrix& operator+=(RealMatrix& a, const RealMatrix& b);

ComplexMatrix to_complex(const RealMatrix& a);
RealMatrix real_part(const ComplexMatrix& a);
RealMatrix imag_part(const ComplexMatrix& a);
RealMatrix modulus(const ComplexMatrix& a);

double max_abs(const RealMatrix& a);
double max_abs(const ComplexMatrix& a);
double max_abs_diff(const RealMatrix& a, const RealMatrix& b);
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);
double frobenius_norm(const RealMatrix& a);
double frobenius_norm(const ComplexMatrix& a);
bool all_finite(const RealMatrix& a);

bool is_power_of_two(std::size_t n) noexcept;
std::size_t log2_exact(std::size_t n);

// ---------------------------------------------------------------------------
// Fourier transform (unitary, 1/√L on both directions)
// ---------------------------------------------------------------------------

/// W(j,k) = ω^{jk}/√L with ω = e^{-2πi/L}.
ComplexMatrix fourier_matrix(std::size_t length);

/// Column-wise unitary transform of a complex matrix. Radix-2 for power-of-two
/// row counts, direct summation otherwise. `inverse` conjugates the kernel.
ComplexMatrix fourier_transform(const ComplexMatrix& x, bool inverse);

/// Direct O(L²) summation, exposed so the fast path can be cross-checked.
ComplexMatrix fourier_transform_direct(const ComplexMatrix& x, bool inverse);

ComplexMatrix dft(const RealMatrix& x);

/// (Re dft(x), Im dft(x)) for real x.
std::pair<RealMatrix, RealMatrix> dft_parts(const RealMatrix& x);

/// Re(Wᴴ·(re + i·im)), the real projection of the inverse transform.
RealMatrix idft_real(const RealMatrix& re, const RealMatrix& im);

struct IdftDiagnostics {
    /// Largest |imag| discarded when projecting back onto the reals.
    double max_residual_imag = 0.0;
    bool warned = false;
};

/// Inverse transform followed by the real projection. Residual imaginary
/// magnitudes above 1e-6 are flagged in `diag` (and logged to stderr when
/// `diag` is null) but never raise.
RealMatrix idft(const ComplexMatrix& spectrum, IdftDiagnostics* diag = nullptr);

// ---------------------------------------------------------------------------
// Haar wavelet transform
// ---------------------------------------------------------------------------

/// Full L×L orthogonal multi-level Haar analysis matrix. Rows are ordered
/// coarsest approximation first, then detail bands from coarse to fine.
class WaveletBasis {
public:
    WaveletBasis(std::size_t length, std::size_t levels);

    std::size_t length() const noexcept { return length_; }
    std::size_t levels() const noexcept { return levels_; }
    const RealMatrix& analysis_matrix() const noexcept { return analysis_; }

private:
    std::size_t length_;
    std::size_t levels_;
    RealMatrix analysis_;
};

WaveletBasis wavelet_basis(std::size_t length, std::size_t levels);

RealMatrix dwt(const RealMatrix& x, const WaveletBasis& basis);
RealMatrix idwt(const RealMatrix& coeffs, const WaveletBasis& basis);

// ---------------------------------------------------------------------------
// Row normalisation kernels
// ---------------------------------------------------------------------------

/// Row-wise softmax with max subtraction.
RealMatrix softmax_rows(const RealMatrix& s);

/// Row-wise x^d / Σ x^d. Every entry must be strictly positive.
RealMatrix poly_norm_rows(const RealMatrix& s, int degree);

}  // namespace tdf
