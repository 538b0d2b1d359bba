#pragma once

// Multipath MU-MIMO channel: power-delay profiles, Rayleigh block-fading
// realizations and their per-subchannel frequency responses.

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "scfde/numerics.hpp"
#include "scfde/rng.hpp"

namespace scfde {

/// Per-tap variances of the channel impulse response.
struct PowerDelayProfile {
    std::vector<double> taps;

    double total() const {
        double s = 0.0;
        for (double p : taps) s += p;
        return s;
    }

    /// Index of the last tap with nonzero power.
    std::size_t support() const {
        std::size_t last = 0;
        for (std::size_t n = 0; n < taps.size(); ++n)
            if (taps[n] > 0.0) last = n;
        return last;
    }

    void validate(std::size_t cp_length) const {
        if (taps.empty()) throw NumericError("power-delay profile has no taps");
        for (double p : taps)
            if (!(p >= 0.0) || !std::isfinite(p)) throw NumericError("power-delay profile tap must be finite and >= 0");
        if (!(total() > 0.0)) throw NumericError("power-delay profile has zero total power");
        if (support() > cp_length) throw NumericError("power-delay profile extends beyond the cyclic prefix");
    }

    /// P_n = 1 - n/(L-1) for n < L, zero beyond; L = 64 gives a total of 32.
    static PowerDelayProfile linear_decay(std::size_t length) {
        PowerDelayProfile p;
        p.taps.resize(length);
        const double last = static_cast<double>(length - 1);
        for (std::size_t n = 0; n < length; ++n) p.taps[n] = length == 1 ? 1.0 : 1.0 - static_cast<double>(n) / last;
        return p;
    }

    static PowerDelayProfile single_tap(double power = 1.0) { return {{power}}; }
};

/// One block-fading realization. CIRs are stored per antenna pair, pair index
/// i * n_t + j for receive antenna i and transmit antenna j.
struct ChannelRealization {
    std::size_t n = 0;
    std::size_t n_t = 0;
    std::size_t n_r = 0;
    std::vector<ComplexVec> cir;
    std::vector<ComplexMat> freq;  // H_k, n_r x n_t, k = 0..n-1

    const ComplexMat& at(std::size_t k) const { return freq[k]; }
    const ComplexVec& taps(std::size_t i, std::size_t j) const { return cir[i * n_t + j]; }

    /// Mean CIR energy over antenna pairs.
    double mean_pair_energy() const {
        double s = 0.0;
        for (const auto& h : cir)
            for (const auto& z : h) s += std::norm(z);
        return cir.empty() ? 0.0 : s / static_cast<double>(cir.size());
    }
};

/// Builds H_k from the CIRs (DFT of each pair's zero-padded CIR).
inline ChannelRealization realization_from_cir(std::size_t n, std::size_t n_t, std::size_t n_r,
                                               std::vector<ComplexVec> cir) {
    if (cir.size() != n_t * n_r) throw NumericError("CIR count does not match antenna dimensions");
    ChannelRealization ch{n, n_t, n_r, std::move(cir), {}};
    ch.freq.assign(n, ComplexMat(n_r, n_t));
    const FftPlan& plan = fft_plan(n);
    ComplexVec buf(n);
    for (std::size_t i = 0; i < n_r; ++i) {
        for (std::size_t j = 0; j < n_t; ++j) {
            const auto& h = ch.cir[i * n_t + j];
            if (h.size() > n) throw NumericError("CIR longer than the block");
            std::fill(buf.begin(), buf.end(), cplx{});
            std::copy(h.begin(), h.end(), buf.begin());
            plan.forward(buf);
            for (std::size_t k = 0; k < n; ++k) ch.freq[k](i, j) = buf[k];
        }
    }
    return ch;
}

/// Independent circularly-symmetric Gaussian taps with variances from the
/// profile, drawn pair by pair in (i, j) order.
inline ChannelRealization draw_rayleigh(const PowerDelayProfile& profile, std::size_t n, std::size_t n_t,
                                        std::size_t n_r, Rng& rng) {
    if (profile.taps.size() > n) throw NumericError("profile longer than the block");
    const std::size_t len = profile.support() + 1;
    std::vector<double> scale(len);
    for (std::size_t t = 0; t < len; ++t) scale[t] = std::sqrt(profile.taps[t] / 2.0);

    std::vector<ComplexVec> cir(n_t * n_r, ComplexVec(len));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& h : cir) {
        for (std::size_t t = 0; t < len; ++t) {
            const double re = normal(rng);
            const double im = normal(rng);
            h[t] = {scale[t] * re, scale[t] * im};
        }
    }
    return realization_from_cir(n, n_t, n_r, std::move(cir));
}

/// Single-path propagation with |H_k^(i,j)|^2 = p_sigma for every pair and k.
inline ChannelRealization los_single_path(std::size_t n, std::size_t n_r, double p_sigma, std::size_t n_t = 1) {
    if (!(p_sigma > 0.0)) throw NumericError("LOS power must be positive");
    std::vector<ComplexVec> cir(n_t * n_r, ComplexVec{cplx(std::sqrt(p_sigma), 0.0)});
    return realization_from_cir(n, n_t, n_r, std::move(cir));
}

// Channel dump: little-endian binary, header "SCFDECH1" then
// u64 {n, n_t, n_r, count}, then per realization per pair u64 tap count and
// the taps as (re, im) doubles. Frequency responses are rebuilt on load.

inline void write_channel_dump(const std::string& path, std::span<const ChannelRealization> ensemble) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open channel dump for writing: " + path);
    auto put = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
    out.write("SCFDECH1", 8);
    const ChannelRealization* first = ensemble.empty() ? nullptr : &ensemble.front();
    put(first ? first->n : 0);
    put(first ? first->n_t : 0);
    put(first ? first->n_r : 0);
    put(ensemble.size());
    for (const auto& ch : ensemble) {
        if (ch.n != first->n || ch.n_t != first->n_t || ch.n_r != first->n_r)
            throw Error("channel dump requires a homogeneous ensemble");
        for (const auto& h : ch.cir) {
            put(h.size());
            for (const auto& z : h) {
                const double parts[2] = {z.real(), z.imag()};
                out.write(reinterpret_cast<const char*>(parts), sizeof parts);
            }
        }
    }
    if (!out) throw Error("failed writing channel dump: " + path);
}

inline std::vector<ChannelRealization> read_channel_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open channel dump: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != "SCFDECH1") throw Error("not a channel dump: " + path);
    auto get = [&] {
        std::uint64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof v);
        if (!in) throw Error("truncated channel dump: " + path);
        return v;
    };
    const std::size_t n = get(), n_t = get(), n_r = get(), count = get();
    std::vector<ChannelRealization> ensemble;
    ensemble.reserve(count);
    for (std::size_t r = 0; r < count; ++r) {
        std::vector<ComplexVec> cir(n_t * n_r);
        for (auto& h : cir) {
            const std::size_t len = get();
            if (len > n) throw Error("corrupt channel dump: CIR longer than block");
            h.resize(len);
            for (auto& z : h) {
                double parts[2];
                in.read(reinterpret_cast<char*>(parts), sizeof parts);
                if (!in) throw Error("truncated channel dump: " + path);
                z = {parts[0], parts[1]};
            }
        }
        ensemble.push_back(realization_from_cir(n, n_t, n_r, std::move(cir)));
    }
    return ensemble;
}

}  // namespace scfde
