#pragma once

// Complex vector/matrix primitives: DFT/IDFT, small dense matrices and
// Hermitian positive-definite inversion.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <unordered_map>
#include <vector>

#include "scfde/error.hpp"

namespace scfde {

using cplx = std::complex<double>;
using ComplexVec = std::vector<cplx>;

inline bool all_finite(std::span<const cplx> v) {
    return std::all_of(v.begin(), v.end(),
                       [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

/// Dense row-major complex matrix.
class ComplexMat {
public:
    ComplexMat() = default;
    ComplexMat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
    ComplexMat(std::size_t rows, std::size_t cols, std::vector<cplx> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) throw NumericError("matrix entry count does not match its shape");
    }

    static ComplexMat identity(std::size_t n) {
        ComplexMat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static ComplexMat diagonal(std::span<const cplx> d) {
        ComplexMat m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    cplx& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<cplx> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const cplx> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<cplx> data() noexcept { return data_; }
    std::span<const cplx> data() const noexcept { return data_; }

    bool operator==(const ComplexMat&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

inline ComplexMat operator*(const ComplexMat& a, const ComplexMat& b) {
    if (a.cols() != b.rows()) throw NumericError("matrix product: inner dimensions differ");
    ComplexMat out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto orow = out.row(i);
        for (std::size_t l = 0; l < a.cols(); ++l) {
            const cplx s = a(i, l);
            auto brow = b.row(l);
            for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += s * brow[j];
        }
    }
    return out;
}

inline ComplexMat operator+(ComplexMat a, const ComplexMat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw NumericError("matrix sum: shapes differ");
    auto ad = a.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < ad.size(); ++i) ad[i] += bd[i];
    return a;
}

inline ComplexMat operator-(ComplexMat a, const ComplexMat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw NumericError("matrix difference: shapes differ");
    auto ad = a.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < ad.size(); ++i) ad[i] -= bd[i];
    return a;
}

inline ComplexVec multiply(const ComplexMat& m, std::span<const cplx> v) {
    if (m.cols() != v.size()) throw NumericError("matrix-vector product: dimension mismatch");
    ComplexVec out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        cplx acc = 0.0;
        auto r = m.row(i);
        for (std::size_t j = 0; j < v.size(); ++j) acc += r[j] * v[j];
        out[i] = acc;
    }
    return out;
}

inline ComplexMat hermitian_transpose(const ComplexMat& m) {
    ComplexMat out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = std::conj(m(i, j));
    return out;
}

/// Largest entry-wise modulus of a - b.
inline double max_abs_diff(const ComplexMat& a, const ComplexMat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw NumericError("max_abs_diff: shapes differ");
    double worst = 0.0;
    auto ad = a.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < ad.size(); ++i) worst = std::max(worst, std::abs(ad[i] - bd[i]));
    return worst;
}

/// Inverse of a Hermitian positive-definite matrix through its Cholesky
/// factor M = L L^H. `subchannel` only labels the error message.
inline ComplexMat invert_hermitian(const ComplexMat& m,
                                   std::size_t subchannel = SingularMatrixError::no_subchannel) {
    if (!m.square()) throw NumericError("invert_hermitian: matrix is not square");
    if (!all_finite(m.data())) throw NumericError("invert_hermitian: non-finite entry");
    const std::size_t n = m.rows();

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(m(i, i)));
    const double floor = scale * 1e-14;

    // Lower factor, only i >= j is used.
    ComplexMat l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = m(j, j).real();
        for (std::size_t p = 0; p < j; ++p) d -= std::norm(l(j, p));
        if (!(d > floor)) throw SingularMatrixError(subchannel, j);
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            cplx s = m(i, j);
            for (std::size_t p = 0; p < j; ++p) s -= l(i, p) * std::conj(l(j, p));
            l(i, j) = s / ljj;
        }
    }

    // W = L^{-1} (lower triangular), then M^{-1} = W^H W.
    ComplexMat w(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        w(c, c) = 1.0 / l(c, c).real();
        for (std::size_t i = c + 1; i < n; ++i) {
            cplx s = 0.0;
            for (std::size_t p = c; p < i; ++p) s -= l(i, p) * w(p, c);
            w(i, c) = s / l(i, i).real();
        }
    }
    ComplexMat inv(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            cplx s = 0.0;
            for (std::size_t p = j; p < n; ++p) s += std::conj(w(p, i)) * w(p, j);
            inv(i, j) = s;
            inv(j, i) = std::conj(s);
        }
        inv(i, i) = inv(i, i).real();
    }
    return inv;
}

/// Precomputed transform for one length. Radix-2 in place for powers of two,
/// a direct O(N^2) sum against a cached twiddle table otherwise.
class FftPlan {
public:
    explicit FftPlan(std::size_t n) : n_(n), radix2_(std::has_single_bit(n)) {
        if (n == 0) throw NumericError("transform length must be positive");
        const std::size_t table = radix2_ ? n / 2 : n;
        twiddle_.resize(table);
        for (std::size_t k = 0; k < table; ++k) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            twiddle_[k] = {std::cos(angle), std::sin(angle)};
        }
        if (radix2_) {
            const int bits = std::countr_zero(n);
            bitrev_.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t r = 0;
                for (int b = 0; b < bits; ++b) r |= ((i >> b) & 1U) << (bits - 1 - b);
                bitrev_[i] = r;
            }
        }
    }

    std::size_t size() const noexcept { return n_; }

    /// Unnormalized forward transform, X_k = sum_n x_n exp(-i 2 pi k n / N).
    void forward(std::span<cplx> x) const { run(x, false); }

    /// Inverse transform including the 1/N factor.
    void inverse(std::span<cplx> x) const {
        run(x, true);
        const double s = 1.0 / static_cast<double>(n_);
        for (auto& z : x) z *= s;
    }

private:
    void run(std::span<cplx> x, bool inverse) const {
        if (x.size() != n_) throw NumericError("transform length mismatch");
        if (radix2_)
            radix2(x, inverse);
        else
            direct(x, inverse);
    }

    void radix2(std::span<cplx> x, bool inverse) const {
        for (std::size_t i = 0; i < n_; ++i)
            if (bitrev_[i] > i) std::swap(x[i], x[bitrev_[i]]);
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t half = len / 2;
            const std::size_t stride = n_ / len;
            for (std::size_t start = 0; start < n_; start += len) {
                for (std::size_t k = 0; k < half; ++k) {
                    cplx w = twiddle_[k * stride];
                    if (inverse) w = std::conj(w);
                    const cplx a = x[start + k];
                    const cplx b = x[start + k + half];
                    const double br = b.real() * w.real() - b.imag() * w.imag();
                    const double bi = b.real() * w.imag() + b.imag() * w.real();
                    x[start + k] = {a.real() + br, a.imag() + bi};
                    x[start + k + half] = {a.real() - br, a.imag() - bi};
                }
            }
        }
    }

    void direct(std::span<cplx> x, bool inverse) const {
        ComplexVec out(n_);
        for (std::size_t k = 0; k < n_; ++k) {
            cplx acc = 0.0;
            for (std::size_t t = 0; t < n_; ++t) {
                cplx w = twiddle_[(k * t) % n_];
                if (inverse) w = std::conj(w);
                acc += x[t] * w;
            }
            out[k] = acc;
        }
        std::copy(out.begin(), out.end(), x.begin());
    }

    std::size_t n_;
    bool radix2_;
    ComplexVec twiddle_;
    std::vector<std::size_t> bitrev_;
};

/// Per-thread plan cache.
inline const FftPlan& fft_plan(std::size_t n) {
    thread_local std::unordered_map<std::size_t, std::unique_ptr<FftPlan>> cache;
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<FftPlan>(n);
    return *slot;
}

inline void dft_inplace(std::span<cplx> v) { fft_plan(v.size()).forward(v); }
inline void idft_inplace(std::span<cplx> v) { fft_plan(v.size()).inverse(v); }

inline ComplexVec dft(std::span<const cplx> v) {
    if (v.empty()) throw NumericError("dft: empty input");
    if (!all_finite(v)) throw NumericError("dft: non-finite input");
    ComplexVec out(v.begin(), v.end());
    dft_inplace(out);
    return out;
}

inline ComplexVec idft(std::span<const cplx> v) {
    if (v.empty()) throw NumericError("idft: empty input");
    if (!all_finite(v)) throw NumericError("idft: non-finite input");
    ComplexVec out(v.begin(), v.end());
    idft_inplace(out);
    return out;
}

}  // namespace scfde
