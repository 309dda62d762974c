#pragma once
#ifndef SDLM_RANDOM_HPP
#define SDLM_RANDOM_HPP

#include "sdlm/linalg.hpp"

#include <cstdint>
#include <random>

namespace sdlm {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent sub-seeds from (master, index).
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix_seed(mix_seed(master) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

inline double standard_normal(Rng& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    return n01(rng);
}

inline Vector standard_normal_vector(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = n01(rng);
    return z;
}

inline double uniform01(Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return u(rng);
}

/// Draw from N(mean, cov); cov may be singular positive semi-definite.
inline Vector draw_mvn(const Vector& mean, const Matrix& cov, Rng& rng) {
    return mean + psd_factor(cov) * standard_normal_vector(mean.size(), rng);
}

} // namespace sdlm

#endif
