#pragma once
#ifndef SDLM_SIMULATE_HPP
#define SDLM_SIMULATE_HPP

// Forward simulation of the joint and single-zone models. The joint
// generator uses the same state noise k²(diag W + K3) as the filter.

#include "sdlm/error.hpp"
#include "sdlm/filter.hpp"
#include "sdlm/kernel.hpp"
#include "sdlm/model.hpp"
#include "sdlm/random.hpp"
#include "sdlm/smoother.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace sdlm {

struct SimulationRecipe {
    JointStaticParams params;
    ZoneGeometry geometry;
    TimeGrid grid;
    double missing_probability = 0.0;   // MCAR, per entry
    std::optional<BoolMatrix> mask;     // explicit pattern; overrides the probability
    std::uint64_t seed = 1;
    ModelOptions options;
};

struct SimulationResult {
    PanelData panel;
    LatentPath truth;   // rows t_0..t_n
};

namespace detail {

inline void check_missingness(double p, const std::optional<BoolMatrix>& mask, Eigen::Index rows, Eigen::Index cols) {
    if (!(p >= 0.0 && p < 1.0)) throw ValidationError("missing probability must lie in [0, 1)");
    if (mask && (mask->rows() != rows || mask->cols() != cols)) throw ValidationError("explicit mask has the wrong shape");
}

/// Applies the mask (explicit, or Bernoulli draws from a stream separate from
/// the value stream so masking is independent of the values).
inline void apply_missingness(PanelData& panel, double p, const std::optional<BoolMatrix>& mask, std::uint64_t seed) {
    if (mask) {
        panel.observed = *mask;
    } else {
        Rng rng(derive_seed(seed, 0x6d61736bULL));
        panel.observed.resize(panel.values.rows(), panel.values.cols());
        for (Eigen::Index i = 0; i < panel.values.rows(); ++i)
            for (Eigen::Index j = 0; j < panel.values.cols(); ++j) panel.observed(i, j) = uniform01(rng) >= p;
    }
    for (Eigen::Index i = 0; i < panel.values.rows(); ++i)
        for (Eigen::Index j = 0; j < panel.values.cols(); ++j)
            if (!panel.observed(i, j)) panel.values(i, j) = std::numeric_limits<double>::quiet_NaN();
}

} // namespace detail

inline SimulationResult simulate_joint(const SimulationRecipe& recipe) {
    const auto nz = static_cast<Eigen::Index>(recipe.geometry.size());
    {
        auto v = recipe.params.violations();
        if (recipe.params.n_zones() != recipe.geometry.size()) v.push_back("dimension mismatch between parameters and geometry");
        if (!v.empty()) throw ValidationError(std::move(v));
    }
    const auto n = static_cast<Eigen::Index>(recipe.grid.size());
    detail::check_missingness(recipe.missing_probability, recipe.mask, n, nz);
    const CovMatrix K3 = kernel_matrix(recipe.geometry, recipe.params.eta3, recipe.options.kernel);
    const Matrix noise_factor = psd_factor(joint_system_base(recipe.params.sys_var, K3));

    Rng rng(recipe.seed);
    SimulationResult out;
    out.truth.states.resize(n + 1, nz);
    Vector level = draw_mvn(recipe.params.init_mean, recipe.params.init_var, rng);
    out.truth.states.row(0) = level.transpose();
    PanelData& panel = out.panel;
    panel.grid = recipe.grid;
    panel.zone_ids = recipe.geometry.zone_ids();
    panel.values.resize(n, nz);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto step = static_cast<std::size_t>(i);
        level += recipe.grid.gap_scales()[step] * (noise_factor * standard_normal_vector(nz, rng));
        out.truth.states.row(i + 1) = level.transpose();
        const Eigen::RowVector3d f = observation_row(recipe.grid.times()[step], recipe.options.harmonic);
        for (Eigen::Index j = 0; j < nz; ++j)
            panel.values(i, j) = recipe.params.theta1(j) * f(0) + recipe.params.theta2(j) * f(1) + level(j) +
                                 std::sqrt(recipe.params.obs_var(j)) * standard_normal(rng);
    }
    detail::apply_missingness(panel, recipe.missing_probability, recipe.mask, recipe.seed);
    return out;
}

struct SingleZoneRecipe {
    SingleZoneParams params;
    TimeGrid grid;
    double missing_probability = 0.0;
    std::optional<BoolMatrix> mask;
    std::uint64_t seed = 1;
    HarmonicConfig harmonic;
    std::string zone_id = "zone_1";
};

/// Time-varying (θ1, θ2, θ3) random walks with variances k²(W1, W2, W3).
/// Zero state variances and a singular initial covariance are allowed here
/// (a component can be held fixed), unlike in the filter.
inline SimulationResult simulate_single(const SingleZoneRecipe& recipe) {
    {
        const SingleZoneParams& p = recipe.params;
        std::vector<std::string> v;
        if (!(p.obs_var >= 0.0) || !std::isfinite(p.obs_var)) v.push_back("negative variance: V");
        for (int k = 0; k < 3; ++k)
            if (!(p.sys_var(k) >= 0.0) || !std::isfinite(p.sys_var(k))) v.push_back("negative variance: W" + std::to_string(k + 1));
        if (!p.init_var.allFinite() || (p.init_var - p.init_var.transpose()).cwiseAbs().maxCoeff() > 0.0 ||
            min_eigenvalue(p.init_var) < -1e-12 * (1.0 + p.init_var.cwiseAbs().maxCoeff()))
            v.push_back("init_var is not symmetric positive semi-definite");
        if (!v.empty()) throw ValidationError(std::move(v));
    }
    const auto n = static_cast<Eigen::Index>(recipe.grid.size());
    detail::check_missingness(recipe.missing_probability, recipe.mask, n, 1);
    Rng rng(recipe.seed);
    SimulationResult out;
    out.truth.states.resize(n + 1, 3);
    Vector theta = draw_mvn(recipe.params.init_mean, recipe.params.init_var, rng);
    out.truth.states.row(0) = theta.transpose();
    const Eigen::Array3d sd = recipe.params.sys_var.array().sqrt();
    PanelData& panel = out.panel;
    panel.grid = recipe.grid;
    panel.zone_ids = {recipe.zone_id};
    panel.values.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto step = static_cast<std::size_t>(i);
        theta += recipe.grid.gap_scales()[step] * (sd * standard_normal_vector(3, rng).array()).matrix();
        out.truth.states.row(i + 1) = theta.transpose();
        panel.values(i, 0) = observation_row(recipe.grid.times()[step], recipe.harmonic).dot(theta) +
                             std::sqrt(recipe.params.obs_var) * standard_normal(rng);
    }
    detail::apply_missingness(panel, recipe.missing_probability, recipe.mask, recipe.seed);
    return out;
}

} // namespace sdlm

#endif
