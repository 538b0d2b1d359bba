#pragma once

// Semi-analytical performance evaluation: per-realization SINR of a linear
// detector, conditional BER under a Gaussian interference model, irreducible
// BER and the single-input matched-filter bounds.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scfde/detectors.hpp"
#include "scfde/parallel.hpp"
#include "scfde/scenario.hpp"

namespace scfde {

inline constexpr double infinite_sinr = std::numeric_limits<double>::infinity();

/// Gaussian tail probability, Q(x) = erfc(x / sqrt 2) / 2.
inline double qfunc(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

enum class BerMode { exact, approx };

/// Conditional BER of Gray-mapped square QAM at a given SINR.
///
/// Exact mode sums per-bit error probabilities of the per-axis PAM decisions,
/// with p_n = Q(sqrt(n^2 SINR / (sigma^2/2))) the probability of the noise
/// exceeding n half-spacings. Approx mode keeps the nearest-neighbour term,
/// (2/m)(1 - 1/M) Q(sqrt(3 SINR / (M^2 - 1))).
inline double ber_from_sinr(double sinr, QamScheme scheme, BerMode mode = BerMode::exact) {
    if (std::isinf(sinr)) return 0.0;
    if (sinr < 0.0) sinr = 0.0;
    const double mm = scheme.levels();
    if (mode == BerMode::approx)
        return (2.0 / scheme.m) * (1.0 - 1.0 / mm) * qfunc(std::sqrt(3.0 * sinr / (mm * mm - 1.0)));

    const double per_level = sinr / (scheme.lattice_power() / 2.0);
    auto p = [&](double n) { return qfunc(std::sqrt(n * n * per_level)); };
    switch (scheme.m) {
        case 1: return p(1);
        case 2: {
            const double b1 = 0.5 * p(1) + 0.5 * p(3);
            const double b2 = 0.5 * (p(1) + p(3)) + 0.5 * (p(1) - p(5));
            return 0.5 * (b1 + b2);
        }
        case 3: {
            const double b1 = 0.25 * (p(1) + p(3) + p(5) + p(7));
            const double b2 = 0.25 * (p(3) - p(11)) + 0.25 * (p(1) - p(9)) + 0.25 * (p(1) + p(7)) + 0.25 * (p(3) + p(5));
            const double b3 = 0.25 * (p(1) - p(5) + p(9) - p(13)) + 0.25 * (p(1) + p(3) - p(7) + p(11)) +
                              0.25 * (p(3) + p(1) - p(5) + p(9)) + 0.25 * (p(1) - p(5) + p(3) - p(7));
            return (b1 + b2 + b3) / 3.0;
        }
        default: throw ValidationError("unsupported QAM scheme");
    }
}

/// Decomposition of one input's SINR. Powers are in the frequency-domain
/// normalization of the detector output, i.e. divided by sigma_j^2 / N.
struct SinrTerms {
    double signal = 0.0;  // N |gamma_j|^2
    double isi = 0.0;     // sum_k |Gamma_k(j,j) - gamma_j|^2
    double mui = 0.0;     // sum_{l != j} (sigma_l^2 / sigma_j^2) sum_k |Gamma_k(j,l)|^2
    double noise = 0.0;   // alpha_j sum_k sum_i |D_k(j,i)|^2
    double sinr = 0.0;

    double interference() const { return isi + mui + noise; }
};

using SinrReport = std::vector<SinrTerms>;

inline SinrReport sinr_linear(const DetectionMatrixSet& set, std::span<const double> alpha,
                              std::span<const double> sigma2) {
    const std::size_t nt = set.n_t;
    if (alpha.size() != nt || sigma2.size() != nt) throw NumericError("alpha and sigma2 need one entry per input");
    SinrReport report(nt);
    std::vector<double> cross(nt * nt, 0.0);  // sum_k |Gamma_k(j,l)|^2
    for (std::size_t k = 0; k < set.n; ++k) {
        const ComplexMat& g = set.gamma_k[k];
        for (std::size_t j = 0; j < nt; ++j) {
            report[j].isi += std::norm(g(j, j) - set.gamma[j]);
            for (std::size_t l = 0; l < nt; ++l)
                if (l != j) cross[j * nt + l] += std::norm(g(j, l));
        }
    }
    for (std::size_t j = 0; j < nt; ++j) {
        auto& t = report[j];
        t.signal = static_cast<double>(set.n) * std::norm(set.gamma[j]);
        for (std::size_t l = 0; l < nt; ++l)
            if (l != j) t.mui += sigma2[l] / sigma2[j] * cross[j * nt + l];
        t.noise = alpha[j] * set.noise_gain[j];
        // Residues at round-off level (e.g. a flat response rebuilt by FFT)
        // count as no interference.
        const double den = t.interference();
        t.sinr = den > 1e-24 * t.signal ? t.signal / den : infinite_sinr;
    }
    return report;
}

/// Error floor: the conditional BER with the noise term removed. The set is
/// expected to be built with the limiting alpha (zero).
inline std::vector<double> iber(const DetectionMatrixSet& set, std::span<const double> sigma2,
                                std::span<const QamScheme> schemes) {
    const std::vector<double> zero(set.n_t, 0.0);
    const auto report = sinr_linear(set, zero, sigma2);
    std::vector<double> out(set.n_t);
    for (std::size_t j = 0; j < set.n_t; ++j) out[j] = ber_from_sinr(report[j].sinr, schemes[j]);
    return out;
}

/// Interference-free matched filter bound for input j of one realization.
inline double simo_mfb_sinr(const ChannelRealization& ch, std::size_t j, double alpha) {
    double energy = 0.0;
    for (const auto& h : ch.freq)
        for (std::size_t i = 0; i < ch.n_r; ++i) energy += std::norm(h(i, j));
    if (alpha == 0.0) return infinite_sinr;
    return energy / (static_cast<double>(ch.n) * alpha);
}

inline double simo_mfb(const ChannelRealization& ch, std::size_t j, double alpha, QamScheme scheme) {
    return ber_from_sinr(simo_mfb_sinr(ch, j, alpha), scheme);
}

/// Single-path, interference-free bound: SINR = 2 eta m N_R Eb/N0.
inline double simo_awgn_mfb(QamScheme scheme, std::size_t n_r, double eta, double ebn0_db) {
    const double sinr = 2.0 * eta * scheme.m * static_cast<double>(n_r) * db_to_linear(ebn0_db);
    return ber_from_sinr(sinr, scheme);
}

/// Eb/N0 (dB) at which the SIMO/AWGN bound reaches `target` BER.
inline double simo_awgn_mfb_ebn0(QamScheme scheme, std::size_t n_r, double eta, double target) {
    double lo = -60.0, hi = 60.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (simo_awgn_mfb(scheme, n_r, eta, mid) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

enum class CurveMethod { semi_analytical, monte_carlo, bound };

inline std::string_view to_string(CurveMethod m) {
    switch (m) {
        case CurveMethod::semi_analytical: return "semi-analytical";
        case CurveMethod::monte_carlo: return "monte-carlo";
        case CurveMethod::bound: return "bound";
    }
    return "?";
}

struct BerPoint {
    double x = 0.0;                // Eb/N0 in dB, or NR for receiver sweeps
    std::vector<double> ber;       // per input
    double aggregate = 0.0;        // bit-weighted over inputs
    double std_error = 0.0;        // of the aggregate
    std::size_t count = 0;         // realizations or blocks
    std::uint64_t n_bits = 0;      // Monte Carlo only
    std::uint64_t n_errors = 0;    // Monte Carlo only
    bool low_confidence = false;   // Monte Carlo stopped before min_errors
};

struct BerCurve {
    CurveMethod method = CurveMethod::semi_analytical;
    std::string axis = "ebn0_db";
    std::string label;
    std::vector<BerPoint> points;
    std::size_t n_realizations = 0;
    std::uint64_t seed = 0;
};

inline double aggregate_ber(std::span<const double> ber, std::span<const QamScheme> schemes) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < ber.size(); ++j) {
        num += schemes[j].m * ber[j];
        den += schemes[j].m;
    }
    return num / den;
}

namespace detail {

/// Mean over realizations of per-input BER vectors, with the standard error
/// of the aggregate.
inline BerPoint average_point(double x, const std::vector<std::vector<double>>& per_real,
                              std::span<const QamScheme> schemes) {
    BerPoint pt;
    pt.x = x;
    const std::size_t r = per_real.size();
    pt.count = r;
    if (r == 0) return pt;
    const std::size_t nt = per_real[0].size();
    pt.ber.assign(nt, 0.0);
    double sum = 0.0, sum2 = 0.0;
    for (const auto& v : per_real) {
        for (std::size_t j = 0; j < nt; ++j) pt.ber[j] += v[j];
        const double a = aggregate_ber(v, schemes);
        sum += a;
        sum2 += a * a;
    }
    for (auto& b : pt.ber) b /= static_cast<double>(r);
    pt.aggregate = aggregate_ber(pt.ber, schemes);
    if (r > 1) {
        const double mean = sum / static_cast<double>(r);
        const double var = std::max(0.0, (sum2 - r * mean * mean) / static_cast<double>(r - 1));
        pt.std_error = std::sqrt(var / static_cast<double>(r));
    }
    return pt;
}

}  // namespace detail

/// BER averaged over `n_realizations` channel draws, each conditioned through
/// the Gaussian interference model. The same ensemble is reused for every
/// grid point.
inline BerCurve semi_analytical_ber(const ScenarioConfig& cfg, DetectorKind kind, std::span<const double> ebn0_grid,
                                    std::size_t n_realizations, std::size_t workers = 1) {
    cfg.validate();
    if (n_realizations < 1) throw ValidationError("at least one channel realization is required");
    if (ebn0_grid.empty()) throw ValidationError("empty Eb/N0 grid");
    const auto sigma2 = cfg.effective_sigma2();
    const auto schemes = cfg.schemes();
    std::vector<NoiseConfig> noise;
    for (double e : ebn0_grid) noise.push_back(derive_noise(cfg, e));

    // per_real[r][g][j]
    auto per_real = parallel_map(n_realizations, workers, [&](std::size_t r) {
        const auto ch = cfg.draw_channel(r);
        const auto grams = gram_set(ch);
        std::vector<std::vector<double>> out(ebn0_grid.size());
        std::optional<DetectionMatrixSet> shared;
        if (kind == DetectorKind::MF) shared = build_detection_set_from_grams(kind, grams, ch.n_r, noise[0].alpha);
        for (std::size_t g = 0; g < ebn0_grid.size(); ++g) {
            std::optional<DetectionMatrixSet> local;
            const DetectionMatrixSet& set =
                shared ? *shared : local.emplace(build_detection_set_from_grams(kind, grams, ch.n_r, noise[g].alpha));
            const auto rep = sinr_linear(set, noise[g].alpha, sigma2);
            out[g].resize(cfg.n_t);
            for (std::size_t j = 0; j < cfg.n_t; ++j) out[g][j] = ber_from_sinr(rep[j].sinr, schemes[j]);
        }
        return out;
    });

    BerCurve curve;
    curve.method = CurveMethod::semi_analytical;
    curve.label = std::string(to_string(kind));
    curve.n_realizations = n_realizations;
    curve.seed = cfg.seed;
    for (std::size_t g = 0; g < ebn0_grid.size(); ++g) {
        std::vector<std::vector<double>> col(n_realizations);
        for (std::size_t r = 0; r < n_realizations; ++r) col[r] = std::move(per_real[r][g]);
        curve.points.push_back(detail::average_point(ebn0_grid[g], col, schemes));
    }
    return curve;
}

/// Semi-analytical SIMO/MFB averaged over the scenario's channel ensemble.
inline BerCurve semi_analytical_simo_mfb(const ScenarioConfig& cfg, std::span<const double> ebn0_grid,
                                         std::size_t n_realizations, std::size_t workers = 1) {
    cfg.validate();
    if (n_realizations < 1) throw ValidationError("at least one channel realization is required");
    const auto schemes = cfg.schemes();
    std::vector<NoiseConfig> noise;
    for (double e : ebn0_grid) noise.push_back(derive_noise(cfg, e));
    auto per_real = parallel_map(n_realizations, workers, [&](std::size_t r) {
        const auto ch = cfg.draw_channel(r);
        std::vector<std::vector<double>> out(ebn0_grid.size(), std::vector<double>(cfg.n_t));
        for (std::size_t j = 0; j < cfg.n_t; ++j) {
            const double unit = simo_mfb_sinr(ch, j, 1.0);
            for (std::size_t g = 0; g < ebn0_grid.size(); ++g)
                out[g][j] = ber_from_sinr(noise[g].alpha[j] > 0.0 ? unit / noise[g].alpha[j] : infinite_sinr,
                                          schemes[j]);
        }
        return out;
    });
    BerCurve curve;
    curve.method = CurveMethod::bound;
    curve.label = "SIMO-MFB";
    curve.n_realizations = n_realizations;
    curve.seed = cfg.seed;
    for (std::size_t g = 0; g < ebn0_grid.size(); ++g) {
        std::vector<std::vector<double>> col(n_realizations);
        for (std::size_t r = 0; r < n_realizations; ++r) col[r] = std::move(per_real[r][g]);
        curve.points.push_back(detail::average_point(ebn0_grid[g], col, schemes));
    }
    return curve;
}

/// Ensemble IBER for several detector kinds on one channel ensemble.
/// With `as_schemes` nonempty every input is evaluated as each listed scheme
/// in turn (the floor SINR only depends on the power ratios), otherwise the
/// scenario's own schemes are used. Result is indexed [kind][scheme].
inline std::vector<std::vector<BerPoint>> ensemble_iber(const ScenarioConfig& cfg, std::span<const DetectorKind> kinds,
                                                        std::size_t n_realizations, std::size_t workers = 1,
                                                        std::span<const QamScheme> as_schemes = {}) {
    cfg.validate();
    if (n_realizations < 1) throw ValidationError("at least one channel realization is required");
    const auto sigma2 = cfg.effective_sigma2();
    std::vector<std::vector<QamScheme>> scheme_sets;
    if (as_schemes.empty())
        scheme_sets.push_back(cfg.schemes());
    else
        for (const auto& s : as_schemes) scheme_sets.emplace_back(cfg.n_t, s);
    const std::vector<double> zero(cfg.n_t, 0.0);

    // per_real[r][kind][scheme][j]
    auto per_real = parallel_map(n_realizations, workers, [&](std::size_t r) {
        const auto ch = cfg.draw_channel(r);
        const auto grams = gram_set(ch);
        std::vector<std::vector<std::vector<double>>> out;
        for (auto kind : kinds) {
            const auto set = build_detection_set_from_grams(kind, grams, ch.n_r, zero);
            const auto rep = sinr_linear(set, zero, sigma2);
            auto& by_scheme = out.emplace_back();
            for (const auto& schemes : scheme_sets) {
                auto& v = by_scheme.emplace_back(cfg.n_t);
                for (std::size_t j = 0; j < cfg.n_t; ++j) v[j] = ber_from_sinr(rep[j].sinr, schemes[j]);
            }
        }
        return out;
    });

    std::vector<std::vector<BerPoint>> result(kinds.size());
    for (std::size_t d = 0; d < kinds.size(); ++d) {
        for (std::size_t s = 0; s < scheme_sets.size(); ++s) {
            std::vector<std::vector<double>> col(n_realizations);
            for (std::size_t r = 0; r < n_realizations; ++r) col[r] = per_real[r][d][s];
            result[d].push_back(detail::average_point(static_cast<double>(cfg.n_r), col, scheme_sets[s]));
        }
    }
    return result;
}

/// Eb/N0 where the curve's aggregate BER crosses `target`, interpolating
/// log10(BER) linearly between grid points.
inline std::optional<double> ebn0_at_ber(const BerCurve& curve, double target) {
    const auto& pts = curve.points;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i].aggregate, b = pts[i + 1].aggregate;
        if (a >= target && b <= target && a > 0.0 && b > 0.0) {
            if (a == b) return pts[i].x;
            const double t = (std::log10(a) - std::log10(target)) / (std::log10(a) - std::log10(b));
            return pts[i].x + t * (pts[i + 1].x - pts[i].x);
        }
    }
    return std::nullopt;
}

}  // namespace scfde
