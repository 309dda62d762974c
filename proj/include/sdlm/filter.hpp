#pragma once
#ifndef SDLM_FILTER_HPP
#define SDLM_FILTER_HPP

// Forward Kalman filter for random-walk state models (G = I) with diagonal
// observation noise and missing observations. Two observation designs are
// provided: identity (joint detrended level model, state = level per zone)
// and the single-zone harmonic row (state = (θ1, θ2, θ3)).

#include "sdlm/error.hpp"
#include "sdlm/kernel.hpp"
#include "sdlm/linalg.hpp"
#include "sdlm/model.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace sdlm {

/// Per-step filtered moments. Index i = 0..n-1 refers to time t_{i+1};
/// (m0, C0) is the initial state at t_0. system_base is the unscaled state
/// noise covariance; step i uses gap_sq[i] * system_base.
struct FilterTrajectory {
    Vector m0;
    Matrix C0;
    std::vector<Vector> m;
    std::vector<Matrix> C;
    std::vector<Matrix> R;
    std::vector<double> loglik;
    std::vector<double> gap_sq;
    Matrix system_base;

    std::size_t steps() const noexcept { return m.size(); }
    const Vector& final_mean() const { return m.empty() ? m0 : m.back(); }
    const Matrix& final_cov() const { return C.empty() ? C0 : C.back(); }
};

struct FilterResult {
    FilterTrajectory trajectory;
    double log_likelihood = 0.0;
};

/// Zero-one selection matrix with one row per observed component.
struct IncidenceMatrix {
    Matrix rows;

    Eigen::Index n_obs() const noexcept { return rows.rows(); }
};

inline IncidenceMatrix incidence(const std::vector<bool>& mask_row) {
    std::vector<Eigen::Index> idx;
    for (std::size_t j = 0; j < mask_row.size(); ++j)
        if (mask_row[j]) idx.push_back(static_cast<Eigen::Index>(j));
    IncidenceMatrix p;
    p.rows = Matrix::Zero(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(mask_row.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) p.rows(static_cast<Eigen::Index>(r), idx[r]) = 1.0;
    return p;
}

inline IncidenceMatrix incidence(const BoolMatrix& observed, Eigen::Index row) {
    std::vector<bool> mask(static_cast<std::size_t>(observed.cols()));
    for (Eigen::Index j = 0; j < observed.cols(); ++j) mask[static_cast<std::size_t>(j)] = observed(row, j);
    return incidence(mask);
}

/// x̃ = x − θ1 sin(2πt/P) − θ2 cos(2πt/P) on observed entries; mask unchanged.
inline PanelData detrend(const PanelData& panel, const Vector& theta1, const Vector& theta2,
                         const HarmonicConfig& config) {
    PanelData out = panel;
    const auto& t = panel.grid.times();
    for (Eigen::Index i = 0; i < panel.values.rows(); ++i) {
        const Eigen::RowVector3d f = observation_row(t[static_cast<std::size_t>(i)], config);
        for (Eigen::Index j = 0; j < panel.values.cols(); ++j)
            if (panel.observed(i, j)) out.values(i, j) -= theta1(j) * f(0) + theta2(j) * f(1);
    }
    return out;
}

/// Adds the harmonic back; inverse of detrend.
inline PanelData retrend(const PanelData& panel, const Vector& theta1, const Vector& theta2,
                         const HarmonicConfig& config) {
    return detrend(panel, -theta1, -theta2, config);
}

namespace detail {

/// Observation design for the detrended joint model: F = I, so the observed
/// block is a row selection.
struct IdentityDesign {
    template <class M>
    auto project(std::size_t /*step*/, const std::vector<Eigen::Index>& idx, const M& x) const {
        return x(idx, Eigen::all);
    }
};

/// Single-zone design: F_t = (sin, cos, 1) at the step's calendar time.
struct HarmonicDesign {
    std::span<const double> times;
    HarmonicConfig config;

    Matrix project(std::size_t step, const std::vector<Eigen::Index>& /*idx*/, const Matrix& x) const {
        return observation_row(times[step], config) * x;
    }
    Vector project(std::size_t step, const std::vector<Eigen::Index>& /*idx*/, const Vector& x) const {
        return Vector::Constant(1, observation_row(times[step], config).dot(x));
    }
};

/// One predict-update cycle. Returns the log predictive density of the
/// observed components (0 when none are observed). On return m, C hold the
/// posterior moments and R the prior covariance.
template <class Design>
double filter_step(const Design& design, std::size_t step, const std::vector<Eigen::Index>& idx, const Vector& y_obs,
                   const Vector& obs_var, double gap_sq, const Matrix& system_base, Vector& m, Matrix& C, Matrix& R) {
    R = C + gap_sq * system_base;
    if (idx.empty()) {
        C = R;
        return 0.0;
    }
    const Matrix FR = design.project(step, idx, R);
    Matrix S = design.project(step, idx, Matrix(FR.transpose()));
    symmetrize(S);
    S.diagonal() += obs_var;
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) throw NumericalError("singular one-step forecast covariance", static_cast<long>(step) + 1);
    const Vector e = y_obs - design.project(step, idx, m);
    const auto L = llt.matrixL();
    const Matrix X = L.solve(FR);
    const Vector z = L.solve(e);
    const double ll = -0.5 * (static_cast<double>(idx.size()) * kLog2Pi + log_det(llt) + z.squaredNorm());
    if (!std::isfinite(ll)) throw NumericalError("non-finite likelihood contribution", static_cast<long>(step) + 1);
    m.noalias() += X.transpose() * z;
    C = R;
    C.noalias() -= X.transpose() * X;
    symmetrize(C);
    return ll;
}

/// Runs the filter over all rows of `values`. obs_var has one entry per
/// column. When `keep` is false only the total log-likelihood is produced.
template <class Design>
FilterResult run_filter(const Design& design, const Matrix& values, const BoolMatrix& observed, const TimeGrid& grid,
                        const Vector& obs_var, const Matrix& system_base, const Vector& m0, const Matrix& C0, bool keep) {
    FilterResult out;
    auto& tr = out.trajectory;
    tr.m0 = m0;
    tr.C0 = C0;
    tr.system_base = system_base;
    const std::size_t n = grid.size();
    tr.gap_sq.resize(n);
    for (std::size_t i = 0; i < n; ++i) tr.gap_sq[i] = grid.gap_squared(i);
    if (keep) {
        tr.m.reserve(n);
        tr.C.reserve(n);
        tr.R.reserve(n);
        tr.loglik.reserve(n);
    }
    Vector m = m0;
    Matrix C = C0;
    Matrix R;
    std::vector<Eigen::Index> idx;
    idx.reserve(static_cast<std::size_t>(values.cols()));
    Vector y_obs;
    Vector v_obs;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        idx.clear();
        for (Eigen::Index j = 0; j < values.cols(); ++j)
            if (observed(row, j)) idx.push_back(j);
        y_obs.resize(static_cast<Eigen::Index>(idx.size()));
        v_obs.resize(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t r = 0; r < idx.size(); ++r) {
            y_obs(static_cast<Eigen::Index>(r)) = values(row, idx[r]);
            v_obs(static_cast<Eigen::Index>(r)) = obs_var(idx[r]);
        }
        const double ll = filter_step(design, i, idx, y_obs, v_obs, tr.gap_sq[i], system_base, m, C, R);
        out.log_likelihood += ll;
        if (keep) {
            tr.m.push_back(m);
            tr.C.push_back(C);
            tr.R.push_back(R);
            tr.loglik.push_back(ll);
        }
    }
    if (!std::isfinite(out.log_likelihood)) throw NumericalError("non-finite total log-likelihood");
    return out;
}

} // namespace detail

/// Joint-model state noise base diag(W) + K3 (scaled by k² per step).
inline Matrix joint_system_base(const Vector& sys_var, const CovMatrix& K3) {
    Matrix w = K3.entries;
    w.diagonal() += sys_var;
    return w;
}

/// Forward filter for the detrended joint level model.
inline FilterResult forward_filter_joint(const PanelData& detrended, const JointStaticParams& params, const CovMatrix& K3,
                                         bool keep_trajectory = true) {
    return detail::run_filter(detail::IdentityDesign{}, detrended.values, detrended.observed, detrended.grid,
                              params.obs_var, joint_system_base(params.sys_var, K3), params.init_mean, params.init_var,
                              keep_trajectory);
}

/// Same recursion with an explicit state-noise base; used where the base is
/// not of the diag(W) + K3 form (e.g. degenerate test models).
inline FilterResult forward_filter_levels(const PanelData& detrended, const Vector& obs_var, const Matrix& system_base,
                                          const Vector& m0, const Matrix& C0, bool keep_trajectory = true) {
    return detail::run_filter(detail::IdentityDesign{}, detrended.values, detrended.observed, detrended.grid, obs_var,
                              system_base, m0, C0, keep_trajectory);
}

/// Single-zone harmonic DLM parameters: V, W = (W1, W2, W3), and θ_{t0} ~ N(m0, C0).
struct SingleZoneParams {
    double obs_var = 1.0;
    Eigen::Vector3d sys_var = Eigen::Vector3d::Ones();
    Eigen::Vector3d init_mean{1.5, 1.5, 6.0};
    Eigen::Matrix3d init_var = Eigen::Vector3d(1.5, 1.5, 20.0).asDiagonal();

    std::vector<std::string> violations() const {
        std::vector<std::string> v;
        if (!(obs_var > 0.0) || !std::isfinite(obs_var)) v.push_back("non-positive variance: V");
        for (int k = 0; k < 3; ++k)
            if (!(sys_var(k) > 0.0) || !std::isfinite(sys_var(k)))
                v.push_back("non-positive variance: W" + std::to_string(k + 1));
        if (Eigen::LLT<Matrix>(Matrix(init_var)).info() != Eigen::Success) v.push_back("init_var is not positive definite");
        return v;
    }
};

/// Forward filter for a single zone (first panel column).
inline FilterResult forward_filter_single(const PanelData& panel, double V, const Vector& W, const Vector& m0,
                                          const Matrix& C0, const HarmonicConfig& config, bool keep_trajectory = true) {
    if (panel.values.cols() != 1) throw ValidationError("single-zone filter needs a one-column panel");
    const detail::HarmonicDesign design{std::span<const double>(panel.grid.times()), config};
    return detail::run_filter(design, panel.values, panel.observed, panel.grid, Vector::Constant(1, V),
                              Matrix(W.asDiagonal()), m0, C0, keep_trajectory);
}

inline FilterResult forward_filter_single(const PanelData& panel, const SingleZoneParams& p, const HarmonicConfig& config,
                                          bool keep_trajectory = true) {
    return forward_filter_single(panel, p.obs_var, p.sys_var, p.init_mean, p.init_var, config, keep_trajectory);
}

} // namespace sdlm

#endif
