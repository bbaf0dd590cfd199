#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "tdformer/numerics.hpp"
#include "test_util.hpp"

using namespace tdf;
using testutil::error_kind_of;
using testutil::random_matrix;

namespace {

ComplexMatrix complex_identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

RealMatrix column(std::vector<double> v) {
    const std::size_t n = v.size();
    return RealMatrix(n, 1, std::move(v));
}

}  // namespace

TEST_CASE("dense products agree with a naive triple loop") {
    const RealMatrix a = random_matrix(7, 5, 1);
    const RealMatrix b = random_matrix(5, 3, 2);
    const RealMatrix c = random_matrix(4, 5, 3);
    CHECK(max_abs_diff(matmul(a, b), testutil::naive_matmul(a, b)) <= 1e-12);
    CHECK(max_abs_diff(matmul_nt(a, c), testutil::naive_matmul(a, testutil::naive_transpose(c))) <= 1e-12);
    CHECK(max_abs_diff(matmul_tn(a, a), testutil::naive_matmul(testutil::naive_transpose(a), a)) <= 1e-12);
    CHECK(error_kind_of([&] { (void)matmul(a, c); }) == ErrorKind::shape);
}

TEST_CASE("matrix construction checks its data length") {
    CHECK(error_kind_of([] { RealMatrix(2, 2, std::vector<double>{1, 2, 3}); }) == ErrorKind::shape);
    const RealMatrix m(2, 3, 1.5);
    CHECK(m.size() == 6);
    CHECK(m(1, 2) == 1.5);
}

TEST_CASE("fourier_matrix small cases") {
    CHECK(error_kind_of([] { (void)fourier_matrix(0); }) == ErrorKind::invalid_size);

    const ComplexMatrix w1 = fourier_matrix(1);
    REQUIRE(w1.rows() == 1);
    CHECK(std::abs(w1(0, 0) - Complex(1.0, 0.0)) <= 1e-15);

    const ComplexMatrix w2 = fourier_matrix(2);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(w2(0, 0) - r) <= 1e-15);
    CHECK(std::abs(w2(0, 1) - r) <= 1e-15);
    CHECK(std::abs(w2(1, 0) - r) <= 1e-15);
    CHECK(std::abs(w2(1, 1) + r) <= 1e-15);
}

TEST_CASE("fourier_matrix entries match direct evaluation") {
    for (std::size_t n : {3u, 5u, 8u, 12u}) {
        const ComplexMatrix w = fourier_matrix(n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                const double angle = -2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
                const Complex expected = std::polar(1.0 / std::sqrt(static_cast<double>(n)), angle);
                CHECK(std::abs(w(j, k) - expected) <= 1e-14);
            }
    }
}

TEST_CASE("fourier_matrix is unitary and symmetric") {
    for (std::size_t n : {1u, 2u, 4u, 8u, 16u, 64u, 6u, 10u}) {
        CAPTURE(n);
        const ComplexMatrix w = fourier_matrix(n);
        CHECK(max_abs_diff(matmul(w, conj_transpose(w)), complex_identity(n)) <= 1e-10);
        CHECK(max_abs_diff(w, transpose(w)) <= 1e-12);
    }
    const ComplexMatrix w4 = fourier_matrix(4);
    CHECK(max_abs_diff(matmul(w4, conj_transpose(w4)), complex_identity(4)) <= 1e-12);
}

TEST_CASE("dft matches the summation oracle at fast and direct lengths") {
    for (std::size_t n : {1u, 2u, 5u, 8u, 12u, 16u, 64u, 100u}) {
        CAPTURE(n);
        const RealMatrix x = random_matrix(n, 3, 10 + n);
        CHECK(max_abs_diff(dft(x), testutil::naive_dft(x)) <= 1e-10);
    }
}

TEST_CASE("radix-2 and direct transforms agree") {
    for (std::size_t n : {2u, 4u, 32u, 128u}) {
        const ComplexMatrix x = to_complex(random_matrix(n, 2, n));
        CHECK(max_abs_diff(fourier_transform(x, false), fourier_transform_direct(x, false)) <= 1e-10);
        CHECK(max_abs_diff(fourier_transform(x, true), fourier_transform_direct(x, true)) <= 1e-10);
    }
}

TEST_CASE("direct transform of complex input matches the radix-2 path") {
    for (std::size_t n : {4u, 16u, 64u}) {
        ComplexMatrix x(n, 2);
        const RealMatrix re = random_matrix(n, 2, n + 1), im = random_matrix(n, 2, n + 2);
        for (std::size_t i = 0; i < x.size(); ++i) x.values()[i] = Complex(re.values()[i], im.values()[i]);
        CHECK(max_abs_diff(fourier_transform(x, false), fourier_transform_direct(x, false)) <= 1e-10);
        CHECK(max_abs_diff(fourier_transform(x, true), fourier_transform_direct(x, true)) <= 1e-10);
    }
}

TEST_CASE("real-input transform parts match the summation oracle") {
    for (std::size_t n : {1u, 6u, 8u, 15u, 64u, 96u}) {
        CAPTURE(n);
        const RealMatrix x = random_matrix(n, 3, 40 + n);
        const ComplexMatrix want = testutil::naive_dft(x);
        const auto [re, im] = dft_parts(x);
        CHECK(max_abs_diff(re, real_part(want)) <= 1e-10);
        CHECK(max_abs_diff(im, imag_part(want)) <= 1e-10);

        const RealMatrix a = random_matrix(n, 3, 50 + n), b = random_matrix(n, 3, 60 + n);
        // Re(Wᴴ(a + i·b)) = Re(Wᴴa) − Im(Wᴴb).
        const RealMatrix inv = real_part(testutil::naive_dft(a, true)) - imag_part(testutil::naive_dft(b, true));
        CHECK(max_abs_diff(idft_real(a, b), inv) <= 1e-10);
    }
    CHECK(error_kind_of([] { (void)idft_real(RealMatrix(4, 1), RealMatrix(4, 2)); }) == ErrorKind::shape);
}

TEST_CASE("dft of a constant column has only the DC mode") {
    const RealMatrix x(8, 1, 2.5);
    const ComplexMatrix f = dft(x);
    CHECK(std::abs(f(0, 0) - Complex(2.5 * std::sqrt(8.0), 0.0)) <= 1e-12);
    for (std::size_t k = 1; k < 8; ++k) CHECK(std::abs(f(k, 0)) <= 1e-12);
}

TEST_CASE("dft of one sine period is a conjugate pair at modes 1 and L-1") {
    const std::size_t n = 16;
    RealMatrix x(n, 1);
    for (std::size_t t = 0; t < n; ++t) x(t, 0) = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 16.0);
    const ComplexMatrix f = dft(x);
    const ComplexMatrix oracle = testutil::naive_dft(x);
    CHECK(max_abs_diff(f, oracle) <= 1e-12);
    for (std::size_t k = 0; k < n; ++k) {
        if (k == 1 || k == n - 1) {
            CHECK(std::abs(f(k, 0)) > 1.0);
        } else {
            CHECK(std::abs(f(k, 0)) <= 1e-12);
        }
    }
    CHECK(std::abs(f(1, 0) - std::conj(f(n - 1, 0))) <= 1e-12);
    // -i·√L/2 at mode 1 under this normalisation
    CHECK(std::abs(f(1, 0) - Complex(0.0, -2.0)) <= 1e-12);

    IdftDiagnostics diag;
    CHECK(max_abs_diff(idft(f, &diag), x) <= 1e-10);
    CHECK(diag.max_residual_imag <= 1e-10);
    CHECK_FALSE(diag.warned);
}

TEST_CASE("dft of an impulse is flat") {
    RealMatrix x(8, 1);
    x(0, 0) = 1.0;
    const ComplexMatrix f = dft(x);
    for (std::size_t k = 0; k < 8; ++k) CHECK(std::abs(f(k, 0) - Complex(1.0 / std::sqrt(8.0), 0.0)) <= 1e-15);
}

TEST_CASE("idft round trip, zero spectrum and residual diagnostics") {
    const RealMatrix x = random_matrix(32, 4, 7);
    CHECK(max_abs_diff(idft(dft(x)), x) <= 1e-10);
    const RealMatrix odd = random_matrix(12, 2, 8);
    CHECK(max_abs_diff(idft(dft(odd)), odd) <= 1e-10);

    const RealMatrix zero = idft(ComplexMatrix(16, 3));
    CHECK(max_abs(zero) == 0.0);

    ComplexMatrix asym(8, 1);
    asym(1, 0) = Complex(1.0, 0.0);  // no conjugate partner at mode 7
    IdftDiagnostics diag;
    (void)idft(asym, &diag);
    CHECK(diag.warned);
    CHECK(diag.max_residual_imag > 1e-6);
}

TEST_CASE("dft is linear and preserves energy") {
    const RealMatrix a = random_matrix(64, 3, 21);
    const RealMatrix b = random_matrix(64, 3, 22);
    const ComplexMatrix lhs = dft(2.0 * a + b);
    const ComplexMatrix fa = dft(a);
    const ComplexMatrix fb = dft(b);
    ComplexMatrix rhs(64, 3);
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs.values()[i] = 2.0 * fa.values()[i] + fb.values()[i];
    CHECK(max_abs_diff(lhs, rhs) <= 1e-12);
    for (std::size_t n : {8u, 24u, 256u}) {
        const RealMatrix x = random_matrix(n, 2, 100 + n);
        CHECK(std::abs(frobenius_norm(dft(x)) - frobenius_norm(x)) <= 1e-9);
    }
}

TEST_CASE("wavelet_basis validates its arguments") {
    CHECK(error_kind_of([] { (void)wavelet_basis(6, 1); }) == ErrorKind::invalid_size);
    CHECK(error_kind_of([] { (void)wavelet_basis(0, 1); }) == ErrorKind::invalid_size);
    CHECK(error_kind_of([] { (void)wavelet_basis(8, 0); }) == ErrorKind::invalid_level);
    CHECK(error_kind_of([] { (void)wavelet_basis(8, 4); }) == ErrorKind::invalid_level);
}

TEST_CASE("wavelet_basis small cases") {
    const double r = 1.0 / std::sqrt(2.0);
    const RealMatrix w2 = wavelet_basis(2, 1).analysis_matrix();
    CHECK(max_abs_diff(w2, RealMatrix(2, 2, {r, r, r, -r})) <= 1e-15);

    const RealMatrix w4 = wavelet_basis(4, 2).analysis_matrix();
    for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(w4(0, c) - 0.5) <= 1e-15);

    const RealMatrix w8 = wavelet_basis(8, 1).analysis_matrix();
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(w8(i, 2 * i) - r) <= 1e-15);
        CHECK(std::abs(w8(i, 2 * i + 1) - r) <= 1e-15);
        CHECK(std::abs(w8(4 + i, 2 * i) - r) <= 1e-15);
        CHECK(std::abs(w8(4 + i, 2 * i + 1) + r) <= 1e-15);
    }
}

TEST_CASE("wavelet_basis columns match pairwise averaging and differencing") {
    for (auto [n, levels] : std::vector<std::pair<std::size_t, std::size_t>>{{8, 1}, {8, 3}, {16, 2}, {32, 5}}) {
        CAPTURE(n);
        CAPTURE(levels);
        const RealMatrix w = wavelet_basis(n, levels).analysis_matrix();
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> e(n, 0.0);
            e[j] = 1.0;
            const std::vector<double> col = testutil::haar_levels(e, levels);
            for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(w(i, j) - col[i]) <= 1e-14);
        }
    }
}

TEST_CASE("wavelet bases are orthogonal for every valid level") {
    for (std::size_t n : {2u, 4u, 8u, 16u, 64u, 256u}) {
        for (std::size_t levels = 1; levels <= log2_exact(n); ++levels) {
            const WaveletBasis b = wavelet_basis(n, levels);
            CHECK(b.length() == n);
            CHECK(b.levels() == levels);
            const RealMatrix& w = b.analysis_matrix();
            CHECK(max_abs_diff(matmul_tn(w, w), RealMatrix::identity(n)) <= 1e-10);
        }
    }
}

TEST_CASE("dwt and idwt") {
    const WaveletBasis b = wavelet_basis(16, 3);
    const RealMatrix constant(16, 2, 3.0);
    const RealMatrix c = dwt(constant, b);
    // 16 / 2^3 = 2 approximation rows; the rest are details
    for (std::size_t i = 2; i < 16; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(c(i, j)) <= 1e-12);

    const RealMatrix x = random_matrix(16, 3, 5);
    CHECK(max_abs_diff(idwt(dwt(x, b), b), x) <= 1e-10);
    CHECK(std::abs(frobenius_norm(dwt(x, b)) - frobenius_norm(x)) <= 1e-10);
    CHECK(error_kind_of([&] { (void)dwt(random_matrix(8, 3, 1), b); }) == ErrorKind::shape);
    CHECK(error_kind_of([&] { (void)idwt(random_matrix(8, 3, 1), b); }) == ErrorKind::shape);
}

TEST_CASE("softmax_rows") {
    const RealMatrix half = softmax_rows(RealMatrix(1, 2, {0.0, 0.0}));
    CHECK(half(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(half(0, 1) == doctest::Approx(0.5).epsilon(1e-15));

    const RealMatrix big = softmax_rows(RealMatrix(1, 2, {1000.0, 0.0}));
    CHECK(all_finite(big));
    CHECK(big(0, 0) == doctest::Approx(1.0));
    CHECK(big(0, 1) < 1e-300);

    const RealMatrix logs = softmax_rows(RealMatrix(1, 3, {std::log(1.0), std::log(2.0), std::log(3.0)}));
    CHECK(std::abs(logs(0, 0) - 1.0 / 6.0) <= 1e-15);
    CHECK(std::abs(logs(0, 1) - 2.0 / 6.0) <= 1e-15);
    CHECK(std::abs(logs(0, 2) - 3.0 / 6.0) <= 1e-15);
}

TEST_CASE("softmax_rows rows are distributions and shift invariant") {
    const RealMatrix s = random_matrix(6, 9, 3, 3.0);
    const RealMatrix p = softmax_rows(s);
    RealMatrix shifted = s;
    for (std::size_t r = 0; r < s.rows(); ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < s.cols(); ++c) {
            CHECK(p(r, c) > 0.0);
            CHECK(p(r, c) < 1.0);
            sum += p(r, c);
            shifted(r, c) += 17.0 * static_cast<double>(r) - 40.0;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
    CHECK(max_abs_diff(softmax_rows(shifted), p) <= 1e-12);
}

TEST_CASE("poly_norm_rows") {
    const RealMatrix uniform = poly_norm_rows(RealMatrix(1, 3, 2.0), 5);
    for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(uniform(0, c) - 1.0 / 3.0) <= 1e-15);

    const RealMatrix d2 = poly_norm_rows(RealMatrix(1, 2, {1.0, 2.0}), 2);
    CHECK(std::abs(d2(0, 0) - 0.2) <= 1e-15);
    CHECK(std::abs(d2(0, 1) - 0.8) <= 1e-15);
    const RealMatrix d4 = poly_norm_rows(RealMatrix(1, 2, {1.0, 2.0}), 4);
    CHECK(std::abs(d4(0, 1) - 16.0 / 17.0) <= 1e-15);
    CHECK(d4(0, 1) > d2(0, 1));

    CHECK(error_kind_of([] { (void)poly_norm_rows(RealMatrix(1, 2, {1.0, 0.0}), 2); }) == ErrorKind::domain);
    CHECK(error_kind_of([] { (void)poly_norm_rows(RealMatrix(1, 2, {1.0, -1.0}), 2); }) == ErrorKind::domain);
    CHECK(error_kind_of([] { (void)poly_norm_rows(RealMatrix(1, 2, {1.0, 2.0}), 0); }) == ErrorKind::domain);
}

TEST_CASE("poly_norm_rows keeps the argmax and polarizes with degree") {
    RealMatrix s = random_matrix(5, 7, 11);
    for (double& v : s.values()) v = std::abs(v) + 0.1;
    std::vector<double> previous_max(s.rows(), 0.0);
    for (int d = 1; d <= 10; ++d) {
        const RealMatrix p = poly_norm_rows(s, d);
        for (std::size_t r = 0; r < s.rows(); ++r) {
            std::size_t arg_s = 0, arg_p = 0;
            double sum = 0.0;
            for (std::size_t c = 0; c < s.cols(); ++c) {
                if (s(r, c) > s(r, arg_s)) arg_s = c;
                if (p(r, c) > p(r, arg_p)) arg_p = c;
                sum += p(r, c);
            }
            CHECK(arg_s == arg_p);
            CHECK(std::abs(sum - 1.0) <= 1e-12);
            CHECK(p(r, arg_p) > previous_max[r]);
            previous_max[r] = p(r, arg_p);
        }
    }
}
