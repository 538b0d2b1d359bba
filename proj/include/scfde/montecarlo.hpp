#pragma once

// Error-counting simulation in the frequency domain: Y_k = H_k S_k + N_k with
// E|N_k^(i)|^2 = N0 N. The cyclic prefix is not simulated; its cost enters
// only through eta in the energy accounting.

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "scfde/analysis.hpp"
#include "scfde/detectors.hpp"
#include "scfde/parallel.hpp"
#include "scfde/rng.hpp"
#include "scfde/scenario.hpp"

namespace scfde {

struct McConfig {
    std::size_t min_errors = 200;   // bit errors at the last iteration before stopping
    std::size_t min_blocks = 20;
    std::size_t max_blocks = 20000;
    std::size_t batch = 16;         // blocks per stopping-rule check
    std::size_t workers = 1;

    void validate() const {
        if (min_errors < 1) throw ValidationError("min_errors must be at least 1");
        if (max_blocks < 1 || batch < 1) throw ValidationError("max_blocks and batch must be positive");
        if (min_blocks > max_blocks) throw ValidationError("min_blocks exceeds max_blocks");
    }
};

/// Transmitted block with its per-symbol labels.
struct TxBlock {
    SymbolBlock symbols;                       // on the transmitted scale
    std::vector<std::vector<unsigned>> labels; // per antenna, per symbol
};

inline TxBlock random_symbols(std::span<const SymbolFormat> formats, std::size_t n, Rng& rng) {
    TxBlock tx;
    tx.symbols.resize(formats.size());
    tx.labels.resize(formats.size());
    for (std::size_t j = 0; j < formats.size(); ++j) {
        const auto points = constellation(formats[j].scheme);
        const unsigned mask = static_cast<unsigned>(points.size() - 1);
        tx.symbols[j].resize(n);
        tx.labels[j].resize(n);
        for (std::size_t t = 0; t < n; ++t) {
            const unsigned label = static_cast<unsigned>(rng()) & mask;
            tx.labels[j][t] = label;
            tx.symbols[j][t] = formats[j].scale * points[label];
        }
    }
    return tx;
}

inline void add_noise(ReceivedBlock& y, double sigma_n2, Rng& rng) {
    ComplexGaussian noise(1.0);
    const double s = std::sqrt(sigma_n2);
    for (auto& v : y)
        for (auto& z : v) z += s * noise(rng);
}

/// Bit-error counts of one block, errors[p][j] for iteration p+1.
struct BlockCounts {
    std::vector<std::vector<std::uint64_t>> errors;
    std::vector<std::uint64_t> bits;
};

inline std::uint64_t count_bit_errors(const ComplexVec& decided, std::span<const unsigned> labels,
                                      const SymbolFormat& fmt) {
    const int levels = fmt.scheme.levels();
    std::uint64_t errs = 0;
    for (std::size_t t = 0; t < decided.size(); ++t) {
        const cplx p = decided[t] / fmt.scale;
        const int qi = detail::axis_index_of(p.real(), levels, 1e-6);
        const int qq = detail::axis_index_of(p.imag(), levels, 1e-6);
        errs += std::popcount(symbol_label(qi, qq, fmt.scheme.m) ^ labels[t]);
    }
    return errs;
}

/// One block: fresh channel, data and noise, all keyed by (seed, block).
inline BlockCounts simulate_block(const ScenarioConfig& cfg, const DfSchedule& schedule, const NoiseConfig& noise,
                                  std::uint64_t seed, std::uint64_t block) {
    const auto formats = cfg.formats();
    const auto ch = cfg.draw_channel(block, seed);
    Rng data_rng = substream(seed, block, StreamPurpose::bits);
    const TxBlock tx = random_symbols(formats, cfg.n, data_rng);
    ReceivedBlock y = transmit(ch, tx.symbols);
    Rng noise_rng = substream(seed, block, StreamPurpose::noise);
    add_noise(y, noise.sigma_n2, noise_rng);

    const DfReceiver rx(schedule, ch, noise.alpha, formats);
    const auto decisions = rx.detect(y);
    BlockCounts out;
    out.bits.resize(cfg.n_t);
    for (std::size_t j = 0; j < cfg.n_t; ++j) out.bits[j] = cfg.n * formats[j].scheme.bits_per_symbol();
    for (const auto& d : decisions) {
        auto& e = out.errors.emplace_back(cfg.n_t);
        for (std::size_t j = 0; j < cfg.n_t; ++j) e[j] = count_bit_errors(d[j], tx.labels[j], formats[j]);
    }
    return out;
}

struct McResult {
    std::vector<BerCurve> per_iteration;  // one curve per DF iteration

    const BerCurve& final_curve() const { return per_iteration.back(); }
};

/// Error-counting BER over an Eb/N0 grid. Blocks are processed in fixed-size
/// batches and the stopping rule is checked between batches, so the result
/// does not depend on `mc.workers`. Block b uses the same channel, data and
/// unit-variance noise at every grid point.
inline McResult run_mc(const ScenarioConfig& cfg, const DfSchedule& schedule, std::span<const double> ebn0_grid,
                       const McConfig& mc, std::uint64_t seed) {
    cfg.validate();
    schedule.validate();
    mc.validate();
    const auto schemes = cfg.schemes();
    const std::size_t iters = schedule.iterations;

    McResult result;
    for (std::size_t p = 0; p < iters; ++p) {
        BerCurve c;
        c.method = CurveMethod::monte_carlo;
        c.label = iters == 1 ? schedule.label() : schedule.label() + "-p" + std::to_string(p + 1);
        c.seed = seed;
        result.per_iteration.push_back(std::move(c));
    }

    for (double ebn0 : ebn0_grid) {
        const NoiseConfig noise = derive_noise(cfg, ebn0);
        std::vector<std::vector<std::uint64_t>> errors(iters, std::vector<std::uint64_t>(cfg.n_t, 0));
        std::vector<std::uint64_t> bits(cfg.n_t, 0);
        std::vector<std::vector<double>> block_ber(iters);
        std::size_t blocks = 0;

        auto total_final = [&] {
            std::uint64_t s = 0;
            for (auto e : errors.back()) s += e;
            return s;
        };
        while (blocks < mc.max_blocks && (blocks < mc.min_blocks || total_final() < mc.min_errors)) {
            const std::size_t count = std::min(mc.batch, mc.max_blocks - blocks);
            auto batch = parallel_map(count, mc.workers, [&](std::size_t i) {
                return simulate_block(cfg, schedule, noise, seed, blocks + i);
            });
            for (const auto& b : batch) {
                std::uint64_t block_bits = 0;
                for (std::size_t j = 0; j < cfg.n_t; ++j) {
                    bits[j] += b.bits[j];
                    block_bits += b.bits[j];
                }
                for (std::size_t p = 0; p < iters; ++p) {
                    std::uint64_t block_errs = 0;
                    for (std::size_t j = 0; j < cfg.n_t; ++j) {
                        errors[p][j] += b.errors[p][j];
                        block_errs += b.errors[p][j];
                    }
                    block_ber[p].push_back(static_cast<double>(block_errs) / static_cast<double>(block_bits));
                }
            }
            blocks += count;
        }

        for (std::size_t p = 0; p < iters; ++p) {
            BerPoint pt;
            pt.x = ebn0;
            pt.count = blocks;
            pt.ber.resize(cfg.n_t);
            for (std::size_t j = 0; j < cfg.n_t; ++j) {
                pt.ber[j] = static_cast<double>(errors[p][j]) / static_cast<double>(bits[j]);
                pt.n_bits += bits[j];
                pt.n_errors += errors[p][j];
            }
            pt.aggregate = static_cast<double>(pt.n_errors) / static_cast<double>(pt.n_bits);
            double mean = 0.0, m2 = 0.0;
            for (double v : block_ber[p]) mean += v;
            mean /= static_cast<double>(blocks);
            for (double v : block_ber[p]) m2 += (v - mean) * (v - mean);
            pt.std_error = blocks > 1 ? std::sqrt(m2 / static_cast<double>(blocks - 1) / static_cast<double>(blocks)) : 0.0;
            pt.low_confidence = total_final() < mc.min_errors;
            result.per_iteration[p].points.push_back(std::move(pt));
            result.per_iteration[p].n_realizations = std::max(result.per_iteration[p].n_realizations, blocks);
        }
    }
    return result;
}

inline BerCurve run_mc_linear(const ScenarioConfig& cfg, DetectorKind kind, std::span<const double> ebn0_grid,
                              const McConfig& mc, std::uint64_t seed) {
    return run_mc(cfg, DfSchedule::linear(kind), ebn0_grid, mc, seed).per_iteration.front();
}

/// Per-input output statistics measured on one channel realization.
/// Powers are per time-domain sample of ytilde^(j).
struct OutputStats {
    struct Estimate {
        double mean = 0.0;
        double std_error = 0.0;
    };
    struct Input {
        cplx gamma{};             // E[ytilde s*] / sigma_j^2
        double gamma_std_error = 0.0;
        Estimate signal, isi, mui, noise;
    };
    std::vector<Input> inputs;
    std::size_t blocks = 0;
    double max_decomposition_residual = 0.0;  // |Ytilde - (gamma S + (Gamma - gamma) S + D N)|
};

/// Analytical counterparts of OutputStats powers: the SINR terms scaled by
/// sigma_j^2 / N.
inline std::vector<SinrTerms> expected_output_powers(const DetectionMatrixSet& set, std::span<const double> alpha,
                                                     std::span<const double> sigma2) {
    auto rep = sinr_linear(set, alpha, sigma2);
    for (std::size_t j = 0; j < rep.size(); ++j) {
        const double s = sigma2[j] / static_cast<double>(set.n);
        rep[j].signal *= s;
        rep[j].isi *= s;
        rep[j].mui *= s;
        rep[j].noise *= s;
    }
    return rep;
}

/// Splits the detector output into its signal, ISI, MUI/MSI and noise terms
/// over `blocks` independent data/noise blocks on a fixed channel, and
/// measures the empirical power of each.
inline OutputStats measure_output_stats(const ChannelRealization& ch, DetectorKind kind, const NoiseConfig& noise,
                                        std::span<const SymbolFormat> formats, std::size_t blocks,
                                        std::uint64_t seed) {
    const std::size_t n = ch.n, nt = ch.n_t, nr = ch.n_r;
    const auto set = build_detection_set(kind, ch, noise.alpha);
    std::vector<ComplexMat> d(n);
    for (std::size_t k = 0; k < n; ++k) d[k] = set.detection_matrix(k, ch);
    std::vector<double> sigma2(nt);
    for (std::size_t j = 0; j < nt; ++j) sigma2[j] = formats[j].scale * formats[j].scale * formats[j].scheme.lattice_power();

    struct Acc {
        std::vector<double> v;
        void add(double x) { v.push_back(x); }
        OutputStats::Estimate est() const {
            OutputStats::Estimate e;
            for (double x : v) e.mean += x;
            e.mean /= static_cast<double>(v.size());
            double m2 = 0.0;
            for (double x : v) m2 += (x - e.mean) * (x - e.mean);
            if (v.size() > 1) e.std_error = std::sqrt(m2 / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
            return e;
        }
    };
    std::vector<Acc> sig(nt), isi(nt), mui(nt), nse(nt), gre(nt), gim(nt);
    OutputStats stats;
    stats.blocks = blocks;

    for (std::size_t b = 0; b < blocks; ++b) {
        Rng data_rng = substream(seed, b, StreamPurpose::symbols);
        const TxBlock tx = random_symbols(formats, n, data_rng);
        std::vector<ComplexVec> s_freq = tx.symbols;
        for (auto& v : s_freq) dft_inplace(v);
        ReceivedBlock clean = transmit(ch, tx.symbols);
        ReceivedBlock y = clean;
        Rng noise_rng = substream(seed, b, StreamPurpose::noise);
        add_noise(y, noise.sigma_n2, noise_rng);

        std::vector<ComplexVec> t_sig(nt, ComplexVec(n)), t_isi = t_sig, t_mui = t_sig, t_nse = t_sig, t_all = t_sig;
        for (std::size_t k = 0; k < n; ++k) {
            ComplexVec nk(nr);
            for (std::size_t i = 0; i < nr; ++i) nk[i] = y[k][i] - clean[k][i];
            const ComplexVec dn = multiply(d[k], nk);
            const ComplexVec dy = multiply(d[k], y[k]);
            const ComplexMat& g = set.gamma_k[k];
            for (std::size_t j = 0; j < nt; ++j) {
                t_sig[j][k] = set.gamma[j] * s_freq[j][k];
                t_isi[j][k] = (g(j, j) - set.gamma[j]) * s_freq[j][k];
                cplx m = 0.0;
                for (std::size_t l = 0; l < nt; ++l)
                    if (l != j) m += g(j, l) * s_freq[l][k];
                t_mui[j][k] = m;
                t_nse[j][k] = dn[j];
                t_all[j][k] = dy[j];
                const cplx residual = dy[j] - (t_sig[j][k] + t_isi[j][k] + m + dn[j]);
                stats.max_decomposition_residual = std::max(stats.max_decomposition_residual, std::abs(residual));
            }
        }
        for (std::size_t j = 0; j < nt; ++j) {
            for (auto* v : {&t_sig[j], &t_isi[j], &t_mui[j], &t_nse[j], &t_all[j]}) idft_inplace(*v);
            double ps = 0, pi = 0, pm = 0, pn = 0;
            cplx corr = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                ps += std::norm(t_sig[j][t]);
                pi += std::norm(t_isi[j][t]);
                pm += std::norm(t_mui[j][t]);
                pn += std::norm(t_nse[j][t]);
                corr += t_all[j][t] * std::conj(tx.symbols[j][t]);
            }
            const double inv = 1.0 / static_cast<double>(n);
            sig[j].add(ps * inv);
            isi[j].add(pi * inv);
            mui[j].add(pm * inv);
            nse[j].add(pn * inv);
            const cplx gh = corr * inv / sigma2[j];
            gre[j].add(gh.real());
            gim[j].add(gh.imag());
        }
    }
    stats.inputs.resize(nt);
    for (std::size_t j = 0; j < nt; ++j) {
        auto& in = stats.inputs[j];
        const auto re = gre[j].est(), im = gim[j].est();
        in.gamma = {re.mean, im.mean};
        in.gamma_std_error = std::hypot(re.std_error, im.std_error);
        in.signal = sig[j].est();
        in.isi = isi[j].est();
        in.mui = mui[j].est();
        in.noise = nse[j].est();
    }
    return stats;
}

}  // namespace scfde
