#include <gtest/gtest.h>

#include <bit>
#include <map>
#include <set>
#include <random>

#include "scfde/modem.hpp"

using namespace scfde;

namespace {

std::vector<std::uint8_t> bits_of(unsigned label, int width) {
    std::vector<std::uint8_t> b(width);
    for (int i = 0; i < width; ++i) b[i] = static_cast<std::uint8_t>((label >> (width - 1 - i)) & 1);
    return b;
}

unsigned label_of(const std::vector<std::uint8_t>& bits) {
    unsigned v = 0;
    for (auto b : bits) v = (v << 1) | b;
    return v;
}

}  // namespace

TEST(Modem, QpskSignMapping) {
    const std::vector<std::uint8_t> bits{0, 0, 1, 1, 0, 1, 1, 0};
    const auto s = map_bits(bits, QamScheme{1});
    EXPECT_EQ(s, (ComplexVec{{1, 1}, {-1, -1}, {1, -1}, {-1, 1}}));
}

TEST(Modem, Qam64Levels) {
    std::set<double> levels;
    for (auto p : constellation(QamScheme{3})) {
        levels.insert(p.real());
        levels.insert(p.imag());
    }
    EXPECT_EQ(levels, (std::set<double>{-7, -5, -3, -1, 1, 3, 5, 7}));
}

TEST(Modem, ConstellationPowerMatchesLattice) {
    for (int m = 1; m <= 3; ++m) {
        const QamScheme s{m};
        const auto pts = constellation(s);
        ASSERT_EQ(pts.size(), static_cast<std::size_t>(s.order()));
        double p = 0;
        for (auto z : pts) p += std::norm(z);
        EXPECT_DOUBLE_EQ(p / pts.size(), s.lattice_power());
    }
    double p64 = 0;
    for (auto z : constellation(QamScheme{3})) p64 += std::norm(z);
    EXPECT_DOUBLE_EQ(p64 / 64.0, 42.0);
}

TEST(Modem, RejectsBadBitCount) {
    EXPECT_THROW(map_bits(std::vector<std::uint8_t>(5), QamScheme{1}), ValidationError);
    EXPECT_THROW(map_bits(std::vector<std::uint8_t>(8), QamScheme{3}), ValidationError);
}

TEST(Modem, RoundTripEveryLabel) {
    for (int m = 1; m <= 3; ++m) {
        const QamScheme s{m};
        for (unsigned label = 0; label < static_cast<unsigned>(s.order()); ++label) {
            const auto bits = bits_of(label, s.bits_per_symbol());
            const auto sym = map_bits(bits, s);
            EXPECT_EQ(demap_bits(sym[0], s), bits);
        }
    }
}

TEST(Modem, GrayAdjacency) {
    for (int m = 1; m <= 3; ++m) {
        const QamScheme s{m};
        std::map<std::pair<int, int>, unsigned> at;
        for (unsigned label = 0; label < static_cast<unsigned>(s.order()); ++label) {
            const auto p = map_bits(bits_of(label, s.bits_per_symbol()), s)[0];
            at[{static_cast<int>(p.real()), static_cast<int>(p.imag())}] = label;
        }
        std::size_t pairs = 0;
        for (const auto& [pos, label] : at) {
            for (auto [dx, dy] : {std::pair{2, 0}, std::pair{0, 2}}) {
                auto it = at.find({pos.first + dx, pos.second + dy});
                if (it == at.end()) continue;
                EXPECT_EQ(std::popcount(label ^ it->second), 1) << s.name();
                ++pairs;
            }
        }
        const std::size_t side = static_cast<std::size_t>(s.levels());
        EXPECT_EQ(pairs, 2 * side * (side - 1));
    }
}

TEST(Modem, SliceExamplesAndTies) {
    EXPECT_EQ(slice({0.2, 0.9}, QamScheme{1}), cplx(1, 1));
    EXPECT_EQ(slice({2.0, 0.0}, QamScheme{2}), cplx(1, 1));
    EXPECT_EQ(slice({-2.0, -4.0}, QamScheme{3}), cplx(-1, -3));
    EXPECT_EQ(slice({0.0, -0.0}, QamScheme{2}), cplx(1, 1));
    EXPECT_EQ(slice({40.0, -40.0}, QamScheme{3}), cplx(7, -7));
    EXPECT_THROW(slice({std::nan(""), 0.0}, QamScheme{1}), NumericError);
}

TEST(Modem, SliceIsNearestPoint) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int m = 1; m <= 3; ++m) {
        const QamScheme s{m};
        const auto pts = constellation(s);
        for (int trial = 0; trial < 2000; ++trial) {
            const cplx y(u(rng), u(rng));
            double best = 1e300;
            for (auto p : pts) best = std::min(best, std::abs(y - p));
            EXPECT_DOUBLE_EQ(std::abs(y - slice(y, s)), best);
        }
    }
}

TEST(Modem, DemapRejectsOffLattice) {
    EXPECT_THROW(demap_bits({2.0, 1.0}, QamScheme{2}), ValidationError);
    EXPECT_THROW(demap_bits({5.0, 1.0}, QamScheme{2}), ValidationError);
    EXPECT_THROW(demap_bits({1.5, 1.0}, QamScheme{1}), ValidationError);
    EXPECT_EQ(label_of(demap_bits({-7, 7}, QamScheme{3})), (4u << 3) | 0u);
}
