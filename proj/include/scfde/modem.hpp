#pragma once

// Square Gray-mapped QAM on the unnormalized odd-integer lattice.
//
// Each axis carries m bits. Axis level index q in [0, M) sits at amplitude
// (M - 1) - 2q and carries the binary-reflected Gray label q ^ (q >> 1),
// most significant bit first. The first m bits of a symbol select the real
// axis, the next m the imaginary axis, so 4-QAM maps 00 -> 1+i, 11 -> -1-i.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scfde/error.hpp"
#include "scfde/numerics.hpp"

namespace scfde {

struct QamScheme {
    int m = 1;  // bits per dimension

    static QamScheme from_order(int order) {
        switch (order) {
            case 4: return {1};
            case 16: return {2};
            case 64: return {3};
            default: throw ValidationError("unsupported QAM order " + std::to_string(order) + " (expected 4, 16 or 64)");
        }
    }

    void validate() const {
        if (m < 1 || m > 3) throw ValidationError("QAM bits-per-dimension must be 1, 2 or 3");
    }

    int levels() const noexcept { return 1 << m; }               // M
    int order() const noexcept { return levels() * levels(); }   // M^2
    int bits_per_symbol() const noexcept { return 2 * m; }
    /// Mean symbol energy of the lattice, 2(M^2 - 1)/3: 2, 10, 42.
    double lattice_power() const noexcept {
        const double mm = levels();
        return 2.0 * (mm * mm - 1.0) / 3.0;
    }
    std::string name() const { return std::to_string(order()) + "-QAM"; }

    bool operator==(const QamScheme&) const = default;
};

/// A constellation as transmitted: the lattice times an amplitude scale.
struct SymbolFormat {
    QamScheme scheme;
    double scale = 1.0;
};

namespace detail {

inline int gray(int q) { return q ^ (q >> 1); }

inline int gray_inverse(int g) {
    int q = 0;
    for (; g; g >>= 1) q ^= g;
    return q;
}

inline double axis_amplitude(int q, int levels) { return static_cast<double>(levels - 1 - 2 * q); }

/// Nearest lattice index on one axis; ties go to the smaller amplitude, then
/// to the positive sign.
inline int slice_axis(double x, int levels) {
    const double a = std::abs(x);
    double odd = 2.0 * std::ceil(a / 2.0) - 1.0;
    if (odd < 1.0) odd = 1.0;
    if (odd > levels - 1) odd = levels - 1;
    const double amp = x < 0.0 ? -odd : odd;
    return static_cast<int>(std::lround((levels - 1 - amp) / 2.0));
}

inline int axis_index_of(double amp, int levels, double tol = 1e-9) {
    const double q = (levels - 1 - amp) / 2.0;
    const double r = std::round(q);
    if (std::abs(q - r) > tol || r < 0 || r > levels - 1) return -1;
    return static_cast<int>(r);
}

}  // namespace detail

/// Per-axis Gray labels of a symbol index pair, packed I-bits then Q-bits.
inline unsigned symbol_label(int qi, int qq, int m) {
    return (static_cast<unsigned>(detail::gray(qi)) << m) | static_cast<unsigned>(detail::gray(qq));
}

inline ComplexVec map_bits(std::span<const std::uint8_t> bits, QamScheme scheme) {
    scheme.validate();
    const std::size_t bps = static_cast<std::size_t>(scheme.bits_per_symbol());
    if (bits.size() % bps != 0)
        throw ValidationError("bit count " + std::to_string(bits.size()) + " is not a multiple of " +
                              std::to_string(bps));
    const int levels = scheme.levels();
    ComplexVec out(bits.size() / bps);
    for (std::size_t s = 0; s < out.size(); ++s) {
        int gi = 0, gq = 0;
        for (int b = 0; b < scheme.m; ++b) {
            gi = (gi << 1) | (bits[s * bps + b] & 1);
            gq = (gq << 1) | (bits[s * bps + scheme.m + b] & 1);
        }
        out[s] = {detail::axis_amplitude(detail::gray_inverse(gi), levels),
                  detail::axis_amplitude(detail::gray_inverse(gq), levels)};
    }
    return out;
}

inline cplx slice(cplx y, QamScheme scheme) {
    if (!std::isfinite(y.real()) || !std::isfinite(y.imag())) throw NumericError("slice: non-finite input");
    const int levels = scheme.levels();
    return {detail::axis_amplitude(detail::slice_axis(y.real(), levels), levels),
            detail::axis_amplitude(detail::slice_axis(y.imag(), levels), levels)};
}

inline std::vector<std::uint8_t> demap_bits(cplx point, QamScheme scheme) {
    const int levels = scheme.levels();
    const int qi = detail::axis_index_of(point.real(), levels);
    const int qq = detail::axis_index_of(point.imag(), levels);
    if (qi < 0 || qq < 0) throw ValidationError("point is not on the " + scheme.name() + " lattice");
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(scheme.bits_per_symbol()));
    const int gi = detail::gray(qi), gq = detail::gray(qq);
    for (int b = 0; b < scheme.m; ++b) {
        bits[b] = static_cast<std::uint8_t>((gi >> (scheme.m - 1 - b)) & 1);
        bits[scheme.m + b] = static_cast<std::uint8_t>((gq >> (scheme.m - 1 - b)) & 1);
    }
    return bits;
}

/// All lattice points, in label order.
inline ComplexVec constellation(QamScheme scheme) {
    const int bps = scheme.bits_per_symbol();
    std::vector<std::uint8_t> bits;
    for (int label = 0; label < (1 << bps); ++label)
        for (int b = bps - 1; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((label >> b) & 1));
    return map_bits(bits, scheme);
}

}  // namespace scfde
