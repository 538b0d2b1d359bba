#pragma once

#include <random>

#include "scfde/numerics.hpp"

namespace scfde::test {

inline ComplexVec random_vec(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> d;
    ComplexVec v(n);
    for (auto& z : v) z = {d(rng), d(rng)};
    return v;
}

inline ComplexMat random_mat(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    ComplexMat m(rows, cols);
    std::normal_distribution<double> d;
    for (auto& z : m.data()) z = {d(rng), d(rng)};
    return m;
}

}  // namespace scfde::test
