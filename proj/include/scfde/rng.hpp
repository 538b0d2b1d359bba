#pragma once

// Seeded substreams. Every random quantity of a simulation is drawn from a
// generator keyed by (seed, work-item index, purpose), so results do not
// depend on how work items are spread over threads.

#include <cmath>
#include <cstdint>
#include <random>

#include "scfde/numerics.hpp"

namespace scfde {

enum class StreamPurpose : std::uint64_t {
    channel = 0x43484e4cULL,
    bits = 0x42495453ULL,
    noise = 0x4e4f4953ULL,
    symbols = 0x53594d42ULL,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

inline Rng substream(std::uint64_t seed, std::uint64_t index, StreamPurpose purpose) {
    std::uint64_t key = splitmix64(seed);
    key = splitmix64(key ^ index);
    key = splitmix64(key ^ static_cast<std::uint64_t>(purpose));
    return Rng(key);
}

/// Circularly-symmetric complex Gaussian sample with E|z|^2 = variance.
class ComplexGaussian {
public:
    explicit ComplexGaussian(double variance = 1.0) : scale_(std::sqrt(variance / 2.0)) {}

    cplx operator()(Rng& rng) {
        const double re = normal_(rng);
        const double im = normal_(rng);
        return {scale_ * re, scale_ * im};
    }

private:
    double scale_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace scfde
