#include <gtest/gtest.h>

#include "scfde/detectors.hpp"
#include "scfde/montecarlo.hpp"
#include "scfde/scenario.hpp"
#include "test_support.hpp"

using namespace scfde;
using scfde::test::random_mat;

namespace {

double frob(const ComplexMat& m) {
    double s = 0.0;
    for (auto z : m.data()) s += std::norm(z);
    return std::sqrt(s);
}

ScenarioConfig small_scenario(std::size_t n_t, std::size_t n_r, QamScheme scheme, std::uint64_t seed = 5) {
    auto cfg = make_scenario(n_t, n_r, scheme, 64, 16);
    cfg.seed = seed;
    return cfg;
}

SymbolBlock random_block(std::span<const SymbolFormat> formats, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    return random_symbols(formats, n, rng).symbols;
}

}  // namespace

TEST(BuildB, MatchedFilterIsIdentity) {
    std::mt19937_64 rng(1);
    const auto h = random_mat(6, 3, rng);
    const std::vector<double> alpha{0.1, 0.2, 0.3};
    EXPECT_EQ(build_B(DetectorKind::MF, h, alpha), ComplexMat::identity(3));
}

TEST(BuildB, SimplifiedEqualsExactForDiagonalA) {
    const std::vector<cplx> diag{3.0, 0.5, 7.25};
    ComplexMat g = ComplexMat::diagonal(diag);
    const std::vector<double> alpha{0.25, 1.0, 0.75};
    const auto simplified = build_B_from_gram(DetectorKind::SimplifiedMMSE, g, alpha);
    const auto exact = build_B_from_gram(DetectorKind::ExactMMSE, g, alpha);
    EXPECT_LT(max_abs_diff(simplified, exact), 1e-15);
    EXPECT_DOUBLE_EQ(simplified(1, 1).real(), 1.0 / 1.5);
}

TEST(BuildB, SimplifiedIsFirstOrderNeumann) {
    // For A = Δ + E with small off-diagonal E, B - A^{-1} is second order in E.
    std::mt19937_64 rng(2);
    for (double eps : {1e-1, 1e-2, 1e-3}) {
        ComplexMat e = random_mat(4, 4, rng);
        e = e + hermitian_transpose(e);
        ComplexMat g(4, 4);
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c) g(r, c) = r == c ? cplx(4.0 + r) : eps * e(r, c);
        const std::vector<double> alpha(4, 0.5);
        ComplexMat a = g;
        for (std::size_t j = 0; j < 4; ++j) a(j, j) += alpha[j];
        const auto inv = invert_hermitian(a);
        const auto b = build_B_from_gram(DetectorKind::SimplifiedMMSE, g, alpha);
        const double err = frob(b - inv);
        EXPECT_LT(err, 10.0 * eps * eps * frob(e) * frob(e) / 16.0) << eps;
        EXPECT_LT(err, frob(inv));
    }
}

TEST(BuildB, ExactMmseInvertsA) {
    std::mt19937_64 rng(3);
    const auto h = random_mat(8, 4, rng);
    const std::vector<double> alpha{0.3, 0.1, 0.2, 0.05};
    auto a = gram(h);
    for (std::size_t j = 0; j < 4; ++j) a(j, j) += alpha[j];
    const auto prod = a * build_B(DetectorKind::ExactMMSE, h, alpha);
    EXPECT_LT(max_abs_diff(prod, ComplexMat::identity(4)), 1e-12);
}

TEST(BuildB, GramMatchesDefinition) {
    std::mt19937_64 rng(4);
    const auto h = random_mat(7, 3, rng);
    EXPECT_LT(max_abs_diff(gram(h), hermitian_transpose(h) * h), 1e-13);
}

TEST(DetectionSet, OverallResponseIsBG) {
    const auto cfg = small_scenario(3, 6, QamScheme{1});
    const auto ch = cfg.draw_channel(0);
    const auto noise = derive_noise(cfg, 4.0);
    for (auto kind : {DetectorKind::MF, DetectorKind::ExactMMSE, DetectorKind::SimplifiedMMSE}) {
        const auto set = build_detection_set(kind, ch, noise.alpha);
        std::vector<cplx> gamma(3, 0.0);
        std::vector<double> ng(3, 0.0);
        for (std::size_t k = 0; k < ch.n; ++k) {
            const auto d = set.detection_matrix(k, ch);
            EXPECT_LT(max_abs_diff(d * ch.at(k), set.gamma_k[k]), 1e-11);
            for (std::size_t j = 0; j < 3; ++j) {
                gamma[j] += set.gamma_k[k](j, j) / static_cast<double>(ch.n);
                for (std::size_t i = 0; i < ch.n_r; ++i) ng[j] += std::norm(d(j, i));
            }
        }
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_NEAR(std::abs(gamma[j] - set.gamma[j]), 0.0, 1e-12 * std::abs(gamma[j]));
            EXPECT_NEAR(ng[j], set.noise_gain[j], 1e-10 * ng[j]);
        }
    }
}

TEST(DetectionSet, LosMatchedFilterGain) {
    const auto ch = los_single_path(32, 5, 3.0);
    const std::vector<double> alpha{0.1};
    const auto set = build_detection_set(DetectorKind::MF, ch, alpha);
    EXPECT_NEAR(set.gamma[0].real(), 5 * 3.0, 1e-12);
    EXPECT_NEAR(set.gamma[0].imag(), 0.0, 1e-12);
}

TEST(DetectionSet, ExactMmseTendsToZeroForcing) {
    const auto cfg = small_scenario(3, 3, QamScheme{1});
    const auto ch = cfg.draw_channel(1);
    const std::vector<double> alpha(3, 1e-9);
    const auto set = build_detection_set(DetectorKind::ExactMMSE, ch, alpha);
    double worst = 0.0;
    for (const auto& g : set.gamma_k) worst = std::max(worst, max_abs_diff(g, ComplexMat::identity(3)));
    EXPECT_LT(worst, 1e-4);
}

TEST(DetectionSet, SingularSubchannelIsReported) {
    // Pair (0,1) equals pair (0,0) and NR = 1, so every G_k is rank one.
    const auto ch = realization_from_cir(8, 2, 1, {{cplx(1.0), cplx(0.5)}, {cplx(1.0), cplx(0.5)}});
    const std::vector<double> alpha(2, 0.0);
    EXPECT_THROW(build_detection_set(DetectorKind::ExactMMSE, ch, alpha), SingularMatrixError);
}

TEST(Detect, OutputDecomposition) {
    const auto cfg = small_scenario(2, 4, QamScheme{2});
    const auto ch = cfg.draw_channel(2);
    const auto noise = derive_noise(cfg, 6.0);
    for (auto kind : {DetectorKind::MF, DetectorKind::ExactMMSE, DetectorKind::SimplifiedMMSE}) {
        const auto stats = measure_output_stats(ch, kind, noise, cfg.formats(), 3, 11);
        EXPECT_LT(stats.max_decomposition_residual, 1e-10 * std::sqrt(cfg.formats()[0].scheme.lattice_power()))
            << to_string(kind);
    }
}

TEST(Detect, NoiselessLosIsExact) {
    auto cfg = make_scenario(1, 4, QamScheme{3}, 64, 16);
    cfg.channel = ChannelKind::los;
    const auto ch = cfg.draw_channel(0);
    const auto formats = cfg.formats();
    const auto s = random_block(formats, cfg.n, 7);
    const auto y = transmit(ch, s);
    const std::vector<double> alpha{0.0};
    for (auto kind : {DetectorKind::MF, DetectorKind::ExactMMSE, DetectorKind::SimplifiedMMSE}) {
        const auto set = build_detection_set(kind, ch, alpha);
        const auto out = linear_detect(set, ch, y);
        for (std::size_t t = 0; t < cfg.n; ++t)
            EXPECT_LT(std::abs(out.time[0][t] / set.gamma[0] - s[0][t]), 1e-12 * std::abs(s[0][t]) + 1e-12);
        EXPECT_EQ(decide(set, out.time, formats), s);
    }
}

TEST(Detect, ZeroForcingRecoversSymbols) {
    const auto cfg = small_scenario(3, 3, QamScheme{1});
    const auto ch = cfg.draw_channel(3);
    const auto formats = cfg.formats();
    const auto s = random_block(formats, cfg.n, 8);
    const std::vector<double> alpha(3, 0.0);
    const auto set = build_detection_set(DetectorKind::ExactMMSE, ch, alpha);
    const auto out = linear_detect(set, ch, transmit(ch, s));
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t t = 0; t < cfg.n; ++t) EXPECT_LT(std::abs(out.time[j][t] - s[j][t]), 1e-9);
}

TEST(DecisionFeedback, PerfectFeedbackRemovesInterference) {
    const auto cfg = small_scenario(4, 4, QamScheme{2});
    const auto ch = cfg.draw_channel(4);
    const auto formats = cfg.formats();
    const auto s = random_block(formats, cfg.n, 9);
    const auto y = transmit(ch, s);
    std::vector<ComplexVec> s_freq = s;
    for (auto& v : s_freq) dft_inplace(v);
    const auto noise = derive_noise(cfg, 10.0);
    for (auto kind : {DetectorKind::MF, DetectorKind::SimplifiedMMSE, DetectorKind::ExactMMSE}) {
        const auto set = build_detection_set(kind, ch, noise.alpha);
        auto y_tilde = linear_detect(set, ch, y).freq;
        cancel_interference(set, y_tilde, s_freq);
        double worst = 0.0;
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t k = 0; k < cfg.n; ++k)
                worst = std::max(worst, std::abs(y_tilde[j][k] - set.gamma[j] * s_freq[j][k]) / std::abs(set.gamma[j]));
        EXPECT_LT(worst, 1e-9) << to_string(kind);
        for (auto& v : y_tilde) idft_inplace(v);
        EXPECT_EQ(decide(set, y_tilde, formats), s);
    }
}

TEST(DecisionFeedback, SingleIterationIsLinearDetection) {
    const auto cfg = small_scenario(3, 5, QamScheme{1});
    const auto ch = cfg.draw_channel(5);
    const auto formats = cfg.formats();
    const auto noise = derive_noise(cfg, 0.0);
    auto y = transmit(ch, random_block(formats, cfg.n, 10));
    Rng nrng(99);
    add_noise(y, noise.sigma_n2, nrng);
    for (auto kind : {DetectorKind::MF, DetectorKind::SimplifiedMMSE, DetectorKind::ExactMMSE}) {
        const auto set = build_detection_set(kind, ch, noise.alpha);
        const auto expect = decide(set, linear_detect(set, ch, y).time, formats);
        const auto got = iterative_df_detect(DfSchedule::linear(kind), ch, noise.alpha, formats, y);
        ASSERT_EQ(got.size(), 1u);
        EXPECT_EQ(got[0], expect);
    }
}

TEST(DecisionFeedback, NoiselessScheduleIsErrorFree) {
    const auto cfg = small_scenario(2, 8, QamScheme{1});
    const auto formats = cfg.formats();
    const std::vector<double> alpha(2, 0.0);
    for (std::uint64_t r = 0; r < 5; ++r) {
        const auto ch = cfg.draw_channel(r);
        const auto s = random_block(formats, cfg.n, 100 + r);
        const auto d = iterative_df_detect({DetectorKind::ExactMMSE, DetectorKind::MF, 4}, ch, alpha, formats,
                                           transmit(ch, s));
        for (const auto& it : d) EXPECT_EQ(it, s);
    }
}

TEST(DecisionFeedback, IterationsReduceErrors) {
    const auto cfg = small_scenario(2, 8, QamScheme{1}, 17);
    McConfig mc;
    mc.min_blocks = mc.max_blocks = 100;
    mc.min_errors = 1;
    const std::vector<double> grid{8.0};
    const auto res = run_mc(cfg, {DetectorKind::MF, DetectorKind::MF, 4}, grid, mc, 17);
    const auto first = res.per_iteration.front().points[0].n_errors;
    const auto last = res.per_iteration.back().points[0].n_errors;
    EXPECT_GT(first, 0u);
    EXPECT_LT(last, first);
}

TEST(DecisionFeedback, ScheduleValidation) {
    EXPECT_THROW((DfSchedule{DetectorKind::MF, DetectorKind::ExactMMSE, 2}.validate()), ValidationError);
    EXPECT_THROW((DfSchedule{DetectorKind::MF, DetectorKind::MF, 0}.validate()), ValidationError);
    EXPECT_NO_THROW((DfSchedule{DetectorKind::ExactMMSE, DetectorKind::SimplifiedMMSE, 4}.validate()));
    EXPECT_EQ((DfSchedule{DetectorKind::SimplifiedMMSE, DetectorKind::MF, 4}.label()), "DF-SimplifiedMMSE-MF-P4");
}

TEST(DecisionFeedback, DegenerateGainIsRejected) {
    // Input 1 is never received.
    const auto ch = realization_from_cir(16, 2, 2, {{cplx(1.0)}, {cplx(0.0)}, {cplx(0.0, 1.0)}, {cplx(0.0)}});
    const auto formats = make_scenario(2, 2, QamScheme{1}, 16, 4).formats();
    const std::vector<double> alpha(2, 0.1);
    EXPECT_THROW(DfReceiver(DfSchedule::linear(DetectorKind::MF), ch, alpha, formats), DegenerateGainError);
}
