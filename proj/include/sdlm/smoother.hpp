#pragma once
#ifndef SDLM_SMOOTHER_HPP
#define SDLM_SMOOTHER_HPP

#include "sdlm/error.hpp"
#include "sdlm/filter.hpp"
#include "sdlm/random.hpp"

namespace sdlm {

/// One joint posterior draw of the latent state path. Row 0 is the state at
/// t_0, row i the state at t_i. Columns are zones (joint model) or
/// (θ1, θ2, θ3) (single-zone model).
struct LatentPath {
    Matrix states;
};

struct GaussianMoments {
    Vector mean;
    Matrix cov;
};

/// Distribution of the state at grid index `index` (0 = t_0) given the state
/// `next` at index + 1 and data up to `index`:
///   h = m + C (C + W̃)⁻¹ (next − m),  H = C − C (C + W̃)⁻¹ C,
/// where C + W̃ is the stored prior covariance of the following step.
inline GaussianMoments backward_conditional(const FilterTrajectory& traj, std::size_t index, const Vector& next) {
    const Vector& m = index == 0 ? traj.m0 : traj.m[index - 1];
    const Matrix& C = index == 0 ? traj.C0 : traj.C[index - 1];
    Eigen::LLT<Matrix> llt(traj.R[index]);
    if (llt.info() != Eigen::Success) throw NumericalError("degenerate smoothing step", static_cast<long>(index));
    // B = C R⁻¹ (both symmetric)
    const Matrix B = llt.solve(C).transpose();
    GaussianMoments g{m + B * (next - m), C - B * C};
    symmetrize(g.cov);
    return g;
}

/// Draws θ_n ~ N(m_n, C_n) and then each earlier state from its backward
/// conditional, down to and including t_0.
inline LatentPath backward_sample(const FilterTrajectory& traj, Rng& rng) {
    const std::size_t n = traj.steps();
    LatentPath path;
    path.states.resize(static_cast<Eigen::Index>(n + 1), traj.m0.size());
    Vector next = draw_mvn(traj.final_mean(), traj.final_cov(), rng);
    path.states.row(static_cast<Eigen::Index>(n)) = next.transpose();
    for (std::size_t index = n; index-- > 0;) {
        const GaussianMoments g = backward_conditional(traj, index, next);
        next = draw_mvn(g.mean, g.cov, rng);
        path.states.row(static_cast<Eigen::Index>(index)) = next.transpose();
    }
    return path;
}

} // namespace sdlm

#endif
