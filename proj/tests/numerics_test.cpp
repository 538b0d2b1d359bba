#include <gtest/gtest.h>

#include <random>

#include "scfde/numerics.hpp"
#include "test_support.hpp"

using namespace scfde;

namespace {

// Direct O(N^2) sum, kept separate from the library's transform.
ComplexVec naive_dft(const ComplexVec& v) {
    const std::size_t n = v.size();
    ComplexVec out(n);
    for (std::size_t k = 0; k < n; ++k) {
        long double re = 0, im = 0;
        for (std::size_t t = 0; t < n; ++t) {
            const long double a = -2.0L * 3.14159265358979323846264338327950288L * static_cast<long double>(k * t % n) / n;
            re += v[t].real() * std::cos(a) - v[t].imag() * std::sin(a);
            im += v[t].real() * std::sin(a) + v[t].imag() * std::cos(a);
        }
        out[k] = {static_cast<double>(re), static_cast<double>(im)};
    }
    return out;
}

double rel_err(const ComplexVec& a, const ComplexVec& b) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

}  // namespace

TEST(Dft, ConstantAndImpulse) {
    const ComplexVec ones{1, 1, 1, 1};
    const auto f = dft(ones);
    EXPECT_EQ(f, (ComplexVec{4, 0, 0, 0}));
    EXPECT_EQ(dft(ComplexVec{1, 0, 0, 0}), ones);
    EXPECT_EQ(idft(ComplexVec{4, 0, 0, 0}), ones);
    EXPECT_EQ(idft(ComplexVec(8)), ComplexVec(8));
}

TEST(Dft, MatchesDirectSum) {
    std::mt19937_64 rng(7);
    for (std::size_t n : {2u, 8u, 64u, 256u, 12u, 30u}) {
        const auto v = test::random_vec(n, rng);
        EXPECT_LT(rel_err(dft(v), naive_dft(v)), 1e-12) << "n=" << n;
    }
}

TEST(Dft, RoundTripAndParseval) {
    std::mt19937_64 rng(11);
    for (std::size_t n : {1u, 4u, 256u, 1024u, 48u}) {
        const auto v = test::random_vec(n, rng);
        const auto f = dft(v);
        EXPECT_LT(rel_err(idft(f), v), 1e-12);
        double time_energy = 0, freq_energy = 0;
        for (auto z : v) time_energy += std::norm(z);
        for (auto z : f) freq_energy += std::norm(z);
        EXPECT_NEAR(time_energy, freq_energy / static_cast<double>(n), 1e-12 * time_energy);
    }
}

TEST(Dft, Linearity) {
    std::mt19937_64 rng(3);
    const auto v = test::random_vec(256, rng), w = test::random_vec(256, rng);
    const cplx a(0.3, -1.2), b(2.0, 0.5);
    ComplexVec mix(256);
    for (std::size_t i = 0; i < 256; ++i) mix[i] = a * v[i] + b * w[i];
    const auto fv = dft(v), fw = dft(w);
    ComplexVec expect(256);
    for (std::size_t i = 0; i < 256; ++i) expect[i] = a * fv[i] + b * fw[i];
    EXPECT_LT(rel_err(dft(mix), expect), 1e-12);
}

TEST(Dft, RejectsNonFinite) {
    ComplexVec v{1, 2, std::numeric_limits<double>::quiet_NaN(), 0};
    EXPECT_THROW(dft(v), NumericError);
    v[2] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(idft(v), NumericError);
    EXPECT_THROW(dft(ComplexVec{}), NumericError);
}

TEST(HermitianTranspose, SmallCase) {
    const ComplexMat m(2, 2, {cplx(1, 1), 0, 2, 3});
    const ComplexMat expect(2, 2, {cplx(1, -1), 2, 0, 3});
    EXPECT_EQ(hermitian_transpose(m), expect);
    EXPECT_EQ(hermitian_transpose(hermitian_transpose(m)), m);
}

TEST(HermitianTranspose, ProductIdentity) {
    std::mt19937_64 rng(5);
    const auto a = test::random_mat(3, 3, rng), b = test::random_mat(3, 3, rng);
    EXPECT_LT(max_abs_diff(hermitian_transpose(a * b), hermitian_transpose(b) * hermitian_transpose(a)), 1e-14);
}

TEST(InvertHermitian, Diagonal) {
    EXPECT_EQ(invert_hermitian(ComplexMat::identity(5)), ComplexMat::identity(5));
    const ComplexVec d{2.0, 4.0};
    const ComplexVec inv{0.5, 0.25};
    EXPECT_LT(max_abs_diff(invert_hermitian(ComplexMat::diagonal(d)), ComplexMat::diagonal(inv)), 1e-15);
}

TEST(InvertHermitian, RandomPositiveDefinite) {
    std::mt19937_64 rng(17);
    for (std::size_t n : {1u, 2u, 12u, 24u, 48u}) {
        for (int rep = 0; rep < 5; ++rep) {
            const auto r = test::random_mat(n, n, rng);
            const ComplexMat a = hermitian_transpose(r) * r + ComplexMat::identity(n);
            const auto inv = invert_hermitian(a);
            EXPECT_LT(max_abs_diff(a * inv, ComplexMat::identity(n)), 1e-10) << "n=" << n;
            EXPECT_LT(max_abs_diff(inv, hermitian_transpose(inv)), 1e-12);
        }
    }
}

TEST(InvertHermitian, SingularNamesSubchannel) {
    ComplexMat a(2, 2, {1.0, 1.0, 1.0, 1.0});
    try {
        invert_hermitian(a, 37);
        FAIL() << "expected SingularMatrixError";
    } catch (const SingularMatrixError& e) {
        EXPECT_EQ(e.subchannel(), 37u);
        EXPECT_NE(std::string(e.what()).find("subchannel 37"), std::string::npos);
    }
    EXPECT_THROW(invert_hermitian(ComplexMat::diagonal(ComplexVec{1.0, -2.0})), SingularMatrixError);
    EXPECT_THROW(invert_hermitian(ComplexMat(2, 3)), NumericError);
}
