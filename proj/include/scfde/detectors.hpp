#pragma once

// Frequency-domain linear detection and the iterative decision-feedback
// receiver.
//
// Every detector has the form D_k = B_k H_k^H with
//   MF              B_k = I
//   ExactMMSE       B_k = A_k^{-1},                         A_k = G_k + alpha
//   SimplifiedMMSE  B_k = diag(A_k)^{-1} [I - (A_k - diag(A_k)) diag(A_k)^{-1}]
// where G_k = H_k^H H_k. The overall response is Gamma_k = D_k H_k = B_k G_k and
// gamma_j = (1/N) sum_k Gamma_k(j,j) is the per-input signal gain.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scfde/channel.hpp"
#include "scfde/modem.hpp"
#include "scfde/numerics.hpp"

namespace scfde {

enum class DetectorKind { MF, ExactMMSE, SimplifiedMMSE };

inline std::string_view to_string(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::MF: return "MF";
        case DetectorKind::ExactMMSE: return "ExactMMSE";
        case DetectorKind::SimplifiedMMSE: return "SimplifiedMMSE";
    }
    return "?";
}

inline std::optional<DetectorKind> parse_detector_kind(std::string_view s) {
    if (s == "MF") return DetectorKind::MF;
    if (s == "ExactMMSE" || s == "MMSE") return DetectorKind::ExactMMSE;
    if (s == "SimplifiedMMSE") return DetectorKind::SimplifiedMMSE;
    return std::nullopt;
}

/// Detector used in iteration 1 and in iterations p > 1. A single iteration
/// is plain linear detection with `first`.
struct DfSchedule {
    DetectorKind first = DetectorKind::SimplifiedMMSE;
    DetectorKind rest = DetectorKind::MF;
    std::size_t iterations = 4;

    static DfSchedule linear(DetectorKind kind) { return {kind, DetectorKind::MF, 1}; }

    DetectorKind kind_at(std::size_t p) const { return p <= 1 ? first : rest; }

    void validate() const {
        if (iterations < 1) throw ValidationError("DF schedule needs at least one iteration");
        if (iterations > 1 && rest == DetectorKind::ExactMMSE)
            throw ValidationError("iterations after the first must use an inversion-free detector (MF or SimplifiedMMSE)");
    }

    std::string label() const {
        if (iterations == 1) return std::string(to_string(first));
        return "DF-" + std::string(to_string(first)) + "-" + std::string(to_string(rest)) + "-P" +
               std::to_string(iterations);
    }
};

/// G = H^H H.
inline ComplexMat gram(const ComplexMat& h) {
    const std::size_t nr = h.rows(), nt = h.cols();
    std::vector<double> re(nt * nt, 0.0), im(nt * nt, 0.0);
    for (std::size_t i = 0; i < nr; ++i) {
        auto row = h.row(i);
        for (std::size_t a = 0; a < nt; ++a) {
            const double ar = row[a].real(), ai = -row[a].imag();
            double* gr = re.data() + a * nt;
            double* gi = im.data() + a * nt;
            for (std::size_t b = a; b < nt; ++b) {
                const double br = row[b].real(), bi = row[b].imag();
                gr[b] += ar * br - ai * bi;
                gi[b] += ar * bi + ai * br;
            }
        }
    }
    ComplexMat g(nt, nt);
    for (std::size_t a = 0; a < nt; ++a) {
        g(a, a) = re[a * nt + a];
        for (std::size_t b = a + 1; b < nt; ++b) {
            g(a, b) = {re[a * nt + b], im[a * nt + b]};
            g(b, a) = {re[a * nt + b], -im[a * nt + b]};
        }
    }
    return g;
}

inline std::vector<ComplexMat> gram_set(const ChannelRealization& ch) {
    std::vector<ComplexMat> out;
    out.reserve(ch.n);
    for (const auto& h : ch.freq) out.push_back(gram(h));
    return out;
}

/// B from the Gram matrix and the diagonal of alpha.
inline ComplexMat build_B_from_gram(DetectorKind kind, const ComplexMat& g, std::span<const double> alpha,
                                    std::size_t subchannel = SingularMatrixError::no_subchannel) {
    const std::size_t nt = g.rows();
    if (kind == DetectorKind::MF) return ComplexMat::identity(nt);
    if (alpha.size() != nt) throw NumericError("alpha must have one entry per input");
    ComplexMat a = g;
    for (std::size_t j = 0; j < nt; ++j) a(j, j) += alpha[j];
    if (kind == DetectorKind::ExactMMSE) return invert_hermitian(a, subchannel);

    std::vector<double> inv_diag(nt);
    for (std::size_t j = 0; j < nt; ++j) {
        const double d = a(j, j).real();
        if (!(d > 0.0)) throw SingularMatrixError(subchannel, j);
        inv_diag[j] = 1.0 / d;
    }
    ComplexMat b(nt, nt);
    for (std::size_t r = 0; r < nt; ++r) {
        for (std::size_t c = 0; c < nt; ++c)
            b(r, c) = r == c ? cplx(inv_diag[r]) : -a(r, c) * (inv_diag[r] * inv_diag[c]);
    }
    return b;
}

inline ComplexMat build_B(DetectorKind kind, const ComplexMat& h, std::span<const double> alpha) {
    return build_B_from_gram(kind, gram(h), alpha);
}

struct DetectionMatrixSet {
    DetectorKind kind = DetectorKind::MF;
    std::size_t n = 0;
    std::size_t n_t = 0;
    std::size_t n_r = 0;
    std::vector<ComplexMat> b;       // B_k
    std::vector<ComplexMat> gamma_k; // Gamma_k = B_k G_k
    std::vector<cplx> gamma;         // gamma_j
    std::vector<double> noise_gain;  // sum_k sum_i |D_k(j,i)|^2

    /// D_k = B_k H_k^H.
    ComplexMat detection_matrix(std::size_t k, const ChannelRealization& ch) const {
        return b[k] * hermitian_transpose(ch.at(k));
    }
};

inline DetectionMatrixSet build_detection_set_from_grams(DetectorKind kind, std::span<const ComplexMat> grams,
                                                         std::size_t n_r, std::span<const double> alpha) {
    DetectionMatrixSet set;
    set.kind = kind;
    set.n = grams.size();
    set.n_t = grams.empty() ? 0 : grams[0].rows();
    set.n_r = n_r;
    set.b.reserve(set.n);
    set.gamma_k.reserve(set.n);
    set.gamma.assign(set.n_t, 0.0);
    set.noise_gain.assign(set.n_t, 0.0);
    for (std::size_t k = 0; k < set.n; ++k) {
        ComplexMat bk = build_B_from_gram(kind, grams[k], alpha, k);
        ComplexMat gk = kind == DetectorKind::MF ? grams[k] : bk * grams[k];
        for (std::size_t j = 0; j < set.n_t; ++j) {
            set.gamma[j] += gk(j, j);
            if (kind == DetectorKind::MF) {
                set.noise_gain[j] += gk(j, j).real();
            } else {
                double s = 0.0;
                for (std::size_t l = 0; l < set.n_t; ++l) s += (gk(j, l) * std::conj(bk(j, l))).real();
                set.noise_gain[j] += s;
            }
        }
        set.b.push_back(std::move(bk));
        set.gamma_k.push_back(std::move(gk));
    }
    for (auto& g : set.gamma) g /= static_cast<double>(set.n);
    return set;
}

inline DetectionMatrixSet build_detection_set(DetectorKind kind, const ChannelRealization& ch,
                                              std::span<const double> alpha) {
    const auto grams = gram_set(ch);
    return build_detection_set_from_grams(kind, grams, ch.n_r, alpha);
}

/// Received frequency-domain block: y[k] has one entry per receive antenna.
using ReceivedBlock = std::vector<ComplexVec>;
/// Per-antenna symbol blocks, symbols[j][n].
using SymbolBlock = std::vector<ComplexVec>;

/// Matched-filter outputs z_k = H_k^H Y_k, stored per antenna: z[j][k].
inline std::vector<ComplexVec> matched_filter(const ChannelRealization& ch, const ReceivedBlock& y) {
    if (y.size() != ch.n) throw NumericError("received block length differs from the channel's");
    std::vector<ComplexVec> z(ch.n_t, ComplexVec(ch.n));
    for (std::size_t k = 0; k < ch.n; ++k) {
        const ComplexMat& h = ch.at(k);
        if (y[k].size() != ch.n_r) throw NumericError("received vector length differs from NR");
        for (std::size_t j = 0; j < ch.n_t; ++j) {
            double re = 0.0, im = 0.0;
            for (std::size_t i = 0; i < ch.n_r; ++i) {
                const cplx hh = h(i, j);
                const cplx yy = y[k][i];
                re += hh.real() * yy.real() + hh.imag() * yy.imag();
                im += hh.real() * yy.imag() - hh.imag() * yy.real();
            }
            z[j][k] = {re, im};
        }
    }
    return z;
}

struct DetectorOutput {
    std::vector<ComplexVec> freq;  // Ytilde^(j), per antenna over k
    std::vector<ComplexVec> time;  // ytilde^(j) = IDFT(Ytilde^(j))
};

namespace detail {

inline std::vector<ComplexVec> apply_b(const DetectionMatrixSet& set, const std::vector<ComplexVec>& z) {
    if (set.kind == DetectorKind::MF) return z;
    std::vector<ComplexVec> out(set.n_t, ComplexVec(set.n));
    for (std::size_t k = 0; k < set.n; ++k) {
        const ComplexMat& bk = set.b[k];
        for (std::size_t j = 0; j < set.n_t; ++j) {
            cplx acc = 0.0;
            for (std::size_t l = 0; l < set.n_t; ++l) acc += bk(j, l) * z[l][k];
            out[j][k] = acc;
        }
    }
    return out;
}

inline void check_gain(const DetectionMatrixSet& set, double reference) {
    for (std::size_t j = 0; j < set.n_t; ++j)
        if (!(std::abs(set.gamma[j]) >= 1e-12 * reference)) throw DegenerateGainError(j, std::abs(set.gamma[j]));
}

}  // namespace detail

/// Ytilde_k = D_k Y_k for every k, plus the per-antenna IDFTs.
inline DetectorOutput linear_detect(const DetectionMatrixSet& set, const ChannelRealization& ch,
                                    const ReceivedBlock& y) {
    DetectorOutput out;
    out.freq = detail::apply_b(set, matched_filter(ch, y));
    out.time = out.freq;
    for (auto& v : out.time) idft_inplace(v);
    return out;
}

/// Hard decisions on ytilde / gamma_j, returned on the transmitted scale.
inline SymbolBlock decide(const DetectionMatrixSet& set, const std::vector<ComplexVec>& time,
                          std::span<const SymbolFormat> formats) {
    SymbolBlock out(set.n_t, ComplexVec(set.n));
    for (std::size_t j = 0; j < set.n_t; ++j) {
        const cplx norm = 1.0 / (set.gamma[j] * formats[j].scale);
        for (std::size_t t = 0; t < set.n; ++t) out[j][t] = formats[j].scale * slice(time[j][t] * norm, formats[j].scheme);
    }
    return out;
}

/// Ytilde'_k = Ytilde_k + [gamma - Gamma_k] Shat_k, in place. `prior_freq`
/// holds the DFTs of the previous decisions per antenna.
inline void cancel_interference(const DetectionMatrixSet& set, std::vector<ComplexVec>& y_tilde,
                                const std::vector<ComplexVec>& prior_freq) {
    const std::size_t nt = set.n_t;
    for (std::size_t k = 0; k < set.n; ++k) {
        const ComplexMat& g = set.gamma_k[k];
        for (std::size_t j = 0; j < nt; ++j) {
            cplx acc = set.gamma[j] * prior_freq[j][k];
            for (std::size_t l = 0; l < nt; ++l) acc -= g(j, l) * prior_freq[l][k];
            y_tilde[j][k] += acc;
        }
    }
}

/// Iterative DF receiver. Detection sets are built once per detector kind
/// used by the schedule; alpha is held fixed across iterations.
class DfReceiver {
public:
    DfReceiver(const DfSchedule& schedule, const ChannelRealization& ch, std::span<const double> alpha,
               std::span<const SymbolFormat> formats, std::span<const ComplexMat> grams = {})
        : schedule_(schedule), ch_(&ch), formats_(formats.begin(), formats.end()) {
        schedule_.validate();
        if (formats_.size() != ch.n_t) throw NumericError("one symbol format per input is required");
        std::vector<ComplexMat> own;
        if (grams.empty()) {
            own = gram_set(ch);
            grams = own;
        }
        const double reference = static_cast<double>(ch.n_r) * ch.mean_pair_energy();
        for (std::size_t p = 1; p <= schedule_.iterations; ++p) {
            const auto kind = schedule_.kind_at(p);
            auto& slot = sets_[static_cast<std::size_t>(kind)];
            if (!slot) {
                slot = build_detection_set_from_grams(kind, grams, ch.n_r, alpha);
                detail::check_gain(*slot, reference);
            }
        }
    }

    const DfSchedule& schedule() const { return schedule_; }
    const DetectionMatrixSet& set_for(std::size_t p) const {
        return *sets_[static_cast<std::size_t>(schedule_.kind_at(p))];
    }

    /// Decisions of every iteration, decisions[p-1][j][n].
    std::vector<SymbolBlock> detect(const ReceivedBlock& y) const {
        const auto z = matched_filter(*ch_, y);
        std::vector<SymbolBlock> decisions;
        std::vector<ComplexVec> prev_freq;  // DFT of the previous decisions, per antenna
        std::array<std::optional<std::vector<ComplexVec>>, 3> linear_out;

        for (std::size_t p = 1; p <= schedule_.iterations; ++p) {
            const DetectionMatrixSet& set = set_for(p);
            auto& cached = linear_out[static_cast<std::size_t>(set.kind)];
            if (!cached) cached = detail::apply_b(set, z);
            std::vector<ComplexVec> y_tilde = *cached;
            if (p > 1) cancel_interference(set, y_tilde, prev_freq);
            for (auto& v : y_tilde) idft_inplace(v);
            SymbolBlock d = decide(set, y_tilde, formats_);
            if (p < schedule_.iterations) {
                prev_freq = d;
                for (auto& v : prev_freq) dft_inplace(v);
            }
            decisions.push_back(std::move(d));
        }
        return decisions;
    }

private:
    DfSchedule schedule_;
    const ChannelRealization* ch_;
    std::vector<SymbolFormat> formats_;
    std::array<std::optional<DetectionMatrixSet>, 3> sets_;
};

inline std::vector<SymbolBlock> iterative_df_detect(const DfSchedule& schedule, const ChannelRealization& ch,
                                                    std::span<const double> alpha,
                                                    std::span<const SymbolFormat> formats, const ReceivedBlock& y) {
    return DfReceiver(schedule, ch, alpha, formats).detect(y);
}

/// Y_k = H_k S_k (+ noise added by the caller), with S^(j) = DFT(s^(j)).
inline ReceivedBlock transmit(const ChannelRealization& ch, const SymbolBlock& s) {
    if (s.size() != ch.n_t) throw NumericError("one symbol block per input is required");
    std::vector<ComplexVec> sf = s;
    for (auto& v : sf) {
        if (v.size() != ch.n) throw NumericError("symbol block length differs from N");
        dft_inplace(v);
    }
    ReceivedBlock y(ch.n, ComplexVec(ch.n_r));
    for (std::size_t k = 0; k < ch.n; ++k) {
        const ComplexMat& h = ch.at(k);
        for (std::size_t i = 0; i < ch.n_r; ++i) {
            cplx acc = 0.0;
            auto row = h.row(i);
            for (std::size_t j = 0; j < ch.n_t; ++j) acc += row[j] * sf[j][k];
            y[k][i] = acc;
        }
    }
    return y;
}

}  // namespace scfde
