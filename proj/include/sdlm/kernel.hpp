#pragma once
#ifndef SDLM_KERNEL_HPP
#define SDLM_KERNEL_HPP

#include "sdlm/error.hpp"
#include "sdlm/linalg.hpp"
#include "sdlm/model.hpp"

#include <cmath>

namespace sdlm {

/// Spatial covariance with its Cholesky factor. `jitter` is the amount that
/// was actually added to the diagonal to make the factorization succeed.
struct CovMatrix {
    Matrix entries;
    double jitter = 0.0;
    Eigen::LLT<Matrix> factor;

    Eigen::Index size() const noexcept { return entries.rows(); }
};

/// Covariance at distance d: σ² exp(−φ d), or σ² exp(−φ d²) for the
/// squared-exponential form.
inline double kernel_value(double distance, const KernelParams& params, KernelForm form = KernelForm::exponential) {
    const double s2 = params.sigma * params.sigma;
    const double arg = form == KernelForm::exponential ? distance : distance * distance;
    return s2 * std::exp(-params.phi * arg);
}

/// Builds K with K(j, j') = f(d_jj'). The factorization is first attempted
/// without jitter; on failure jitter of 1e-9·σ² is added and raised by ×10 up
/// to 1e-3·σ².
inline CovMatrix kernel_matrix(const Matrix& distances, const KernelParams& params,
                               KernelForm form = KernelForm::exponential) {
    const Eigen::Index n = distances.rows();
    CovMatrix k;
    k.entries.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k.entries(i, i) = kernel_value(0.0, params, form);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = kernel_value(distances(i, j), params, form);
            k.entries(i, j) = v;
            k.entries(j, i) = v;
        }
    }
    const double s2 = params.sigma * params.sigma;
    k.factor.compute(k.entries);
    if (k.factor.info() == Eigen::Success) return k;
    for (double scale = 1e-9; scale <= 1e-3 * (1.0 + 1e-9); scale *= 10.0) {
        const double jitter = scale * s2;
        Matrix trial = k.entries;
        trial.diagonal().array() += jitter;
        k.factor.compute(trial);
        if (k.factor.info() == Eigen::Success) {
            k.entries = std::move(trial);
            k.jitter = jitter;
            return k;
        }
    }
    throw NumericalError("kernel numerically singular");
}

inline CovMatrix kernel_matrix(const ZoneGeometry& geometry, const KernelParams& params,
                               KernelForm form = KernelForm::exponential) {
    return kernel_matrix(geometry.distances(), params, form);
}

/// Multivariate normal log-density of `values` under N(mean, cov).
inline double gp_log_density(const Vector& values, const Vector& mean, const CovMatrix& cov) {
    return mvn_log_density(values, mean, cov.factor);
}

} // namespace sdlm

#endif
