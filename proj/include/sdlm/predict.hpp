#pragma once
#ifndef SDLM_PREDICT_HPP
#define SDLM_PREDICT_HPP

// Within-sample posterior predictive draws, k-step-ahead forecasts,
// amplitude/phase summaries and fit metrics.

#include "sdlm/error.hpp"
#include "sdlm/fit.hpp"
#include "sdlm/kernel.hpp"
#include "sdlm/model.hpp"
#include "sdlm/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace sdlm {

struct AmplitudePhase {
    double amplitude = 0.0;
    double phase = 0.0;
};

/// θ1 sin(ωt) + θ2 cos(ωt) = amplitude · cos(ωt − phase), phase in (−π, π].
inline AmplitudePhase amplitude_phase(double theta1, double theta2) {
    AmplitudePhase ap;
    ap.amplitude = std::hypot(theta1, theta2);
    if (ap.amplitude == 0.0) return ap;
    ap.phase = std::atan2(theta1, theta2);
    if (ap.phase <= -std::numbers::pi) ap.phase = std::numbers::pi;
    return ap;
}

/// Empirical quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double p) {
    if (v.empty()) throw ValidationError("quantile of an empty sample");
    std::sort(v.begin(), v.end());
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct IntervalSummary {
    Matrix mean;
    Matrix lo;
    Matrix hi;
};

/// Element-wise mean and [lower, upper] quantiles over a set of equally
/// shaped draw matrices.
inline IntervalSummary summarize(const std::vector<Matrix>& draws, double lower = 0.025, double upper = 0.975) {
    if (draws.empty()) throw ValidationError("cannot summarise an empty draw set");
    const Eigen::Index rows = draws.front().rows();
    const Eigen::Index cols = draws.front().cols();
    IntervalSummary s{Matrix::Zero(rows, cols), Matrix(rows, cols), Matrix(rows, cols)};
    std::vector<double> cell(draws.size());
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            double sum = 0.0;
            for (std::size_t r = 0; r < draws.size(); ++r) {
                cell[r] = draws[r](i, j);
                sum += cell[r];
            }
            s.mean(i, j) = sum / static_cast<double>(draws.size());
            s.lo(i, j) = quantile(cell, lower);
            s.hi(i, j) = quantile(cell, upper);
        }
    return s;
}

/// Per-draw n x n_z predictive matrices on a time grid.
struct PredictiveDraws {
    std::vector<double> times;
    std::vector<std::string> zone_ids;
    std::vector<Matrix> draws;

    IntervalSummary summary(double lower = 0.025, double upper = 0.975) const { return summarize(draws, lower, upper); }
};

/// X̂ ~ N(θ1 sin + θ2 cos + θ3_t, V) for every retained draw, time and zone.
/// Draw r uses the random stream derive_seed(seed, r).
inline PredictiveDraws within_sample_predictive(const std::vector<JointStaticParams>& params,
                                                const std::vector<LatentPath>& paths, const PanelData& panel,
                                                const HarmonicConfig& config, std::uint64_t seed, std::size_t threads = 1) {
    if (params.size() != paths.size()) throw ValidationError("misaligned draw collections: parameter and path counts differ");
    const auto n = static_cast<Eigen::Index>(panel.n_times());
    const auto nz = static_cast<Eigen::Index>(panel.n_zones());
    PredictiveDraws out{panel.grid.times(), panel.zone_ids, std::vector<Matrix>(params.size())};
    for (std::size_t r = 0; r < params.size(); ++r)
        if (paths[r].states.rows() != n + 1 || paths[r].states.cols() != nz || params[r].n_zones() != panel.n_zones())
            throw ValidationError("misaligned draw collections: path shape does not match the panel");
    parallel_for(params.size(), threads, [&](std::size_t r) {
        Rng rng(derive_seed(seed, r));
        Matrix x(n, nz);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::RowVector3d f = observation_row(panel.grid.times()[static_cast<std::size_t>(i)], config);
            for (Eigen::Index j = 0; j < nz; ++j) {
                const double mean = params[r].theta1(j) * f(0) + params[r].theta2(j) * f(1) + paths[r].states(i + 1, j);
                x(i, j) = mean + std::sqrt(params[r].obs_var(j)) * standard_normal(rng);
            }
        }
        out.draws[r] = std::move(x);
    });
    return out;
}

/// Single-zone predictive: X̂ ~ N(F_t θ_t, V) with θ_t = (θ1, θ2, θ3) from the path.
inline PredictiveDraws within_sample_predictive_single(const std::vector<SingleZoneParams>& params,
                                                       const std::vector<LatentPath>& paths, const PanelData& zone_panel,
                                                       const HarmonicConfig& config, std::uint64_t seed,
                                                       std::size_t threads = 1) {
    if (params.size() != paths.size()) throw ValidationError("misaligned draw collections: parameter and path counts differ");
    const auto n = static_cast<Eigen::Index>(zone_panel.n_times());
    PredictiveDraws out{zone_panel.grid.times(), zone_panel.zone_ids, std::vector<Matrix>(params.size())};
    parallel_for(params.size(), threads, [&](std::size_t r) {
        if (paths[r].states.rows() != n + 1 || paths[r].states.cols() != 3)
            throw ValidationError("misaligned draw collections: path shape does not match the panel");
        Rng rng(derive_seed(seed, r));
        Matrix x(n, 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mean =
                observation_row(zone_panel.grid.times()[static_cast<std::size_t>(i)], config).dot(paths[r].states.row(i + 1));
            x(i, 0) = mean + std::sqrt(params[r].obs_var) * standard_normal(rng);
        }
        out.draws[r] = std::move(x);
    });
    return out;
}

/// State forecast moments: mean m_n and R_{n+h} = C_n + Σ_{i<=h} k_{n+i}² · base.
struct ForecastMoments {
    std::vector<Vector> mean;
    std::vector<Matrix> cov;
};

inline ForecastMoments forecast_moments(const Vector& m_n, const Matrix& C_n, const Matrix& system_base,
                                        const TimeGrid& extension) {
    ForecastMoments fm;
    Matrix R = C_n;
    for (std::size_t h = 0; h < extension.size(); ++h) {
        R += extension.gap_squared(h) * system_base;
        fm.mean.push_back(m_n);
        fm.cov.push_back(R);
    }
    return fm;
}

struct ForecastResult {
    std::vector<double> horizons;
    std::vector<std::string> zone_ids;
    std::vector<Matrix> draws;        // observation draws, horizons x zones
    std::vector<Matrix> state_draws;  // level (joint) or signal F θ (single zone)
    IntervalSummary summary;
};

/// k-step-ahead forecasts for `n_draws` draws; draw r uses posterior draw
/// r mod (available draws) with its own filtered end state (m_n, C_n).
inline ForecastResult k_step_forecast(const std::vector<Vector>& final_mean, const std::vector<Matrix>& final_cov,
                                      const std::vector<JointStaticParams>& params, const ZoneGeometry& geometry,
                                      const TimeGrid& extension, const ModelOptions& options, std::size_t n_draws,
                                      std::uint64_t seed, std::size_t threads = 1, double lower = 0.025,
                                      double upper = 0.975) {
    if (extension.size() == 0) throw ValidationError("empty forecast horizon");
    if (params.empty() || params.size() != final_mean.size() || params.size() != final_cov.size())
        throw ValidationError("misaligned draw collections for forecasting");
    if (n_draws == 0) throw ValidationError("forecast needs at least one draw");
    const std::size_t H = extension.size();
    const auto nz = static_cast<Eigen::Index>(geometry.size());
    ForecastResult out;
    out.horizons = extension.times();
    out.zone_ids = geometry.zone_ids();
    out.draws.resize(n_draws);
    out.state_draws.resize(n_draws);
    parallel_for(n_draws, threads, [&](std::size_t r) {
        const std::size_t k = r % params.size();
        const JointStaticParams& p = params[k];
        const CovMatrix K3 = kernel_matrix(geometry, p.eta3, options.kernel);
        const ForecastMoments fm = forecast_moments(final_mean[k], final_cov[k], joint_system_base(p.sys_var, K3), extension);
        Rng rng(derive_seed(seed, r));
        Matrix obs(static_cast<Eigen::Index>(H), nz);
        Matrix state(static_cast<Eigen::Index>(H), nz);
        for (std::size_t h = 0; h < H; ++h) {
            const auto hh = static_cast<Eigen::Index>(h);
            state.row(hh) = draw_mvn(fm.mean[h], fm.cov[h], rng).transpose();
            Matrix obs_cov = fm.cov[h];
            obs_cov.diagonal() += p.obs_var;
            const Vector x_tilde = draw_mvn(fm.mean[h], obs_cov, rng);
            const Eigen::RowVector3d f = observation_row(extension.times()[h], options.harmonic);
            for (Eigen::Index j = 0; j < nz; ++j) {
                const double seasonal = p.theta1(j) * f(0) + p.theta2(j) * f(1);
                obs(hh, j) = x_tilde(j) + seasonal;
            }
        }
        out.draws[r] = std::move(obs);
        out.state_draws[r] = std::move(state);
    });
    out.summary = summarize(out.draws, lower, upper);
    return out;
}

/// Single-zone forecast: observation F_t θ + ν with θ ~ N(m_n, R_{n+h}).
inline ForecastResult k_step_forecast_single(const std::vector<Vector>& final_mean, const std::vector<Matrix>& final_cov,
                                             const std::vector<SingleZoneParams>& params, const std::string& zone_id,
                                             const TimeGrid& extension, const HarmonicConfig& config, std::size_t n_draws,
                                             std::uint64_t seed, std::size_t threads = 1, double lower = 0.025,
                                             double upper = 0.975) {
    if (extension.size() == 0) throw ValidationError("empty forecast horizon");
    if (params.empty() || params.size() != final_mean.size() || params.size() != final_cov.size())
        throw ValidationError("misaligned draw collections for forecasting");
    if (n_draws == 0) throw ValidationError("forecast needs at least one draw");
    const std::size_t H = extension.size();
    ForecastResult out;
    out.horizons = extension.times();
    out.zone_ids = {zone_id};
    out.draws.resize(n_draws);
    out.state_draws.resize(n_draws);
    parallel_for(n_draws, threads, [&](std::size_t r) {
        const std::size_t k = r % params.size();
        const ForecastMoments fm =
            forecast_moments(final_mean[k], final_cov[k], Matrix(params[k].sys_var.asDiagonal()), extension);
        Rng rng(derive_seed(seed, r));
        Matrix obs(static_cast<Eigen::Index>(H), 1);
        Matrix signal(static_cast<Eigen::Index>(H), 1);
        for (std::size_t h = 0; h < H; ++h) {
            const Eigen::RowVector3d f = observation_row(extension.times()[h], config);
            const Vector theta = draw_mvn(fm.mean[h], fm.cov[h], rng);
            signal(static_cast<Eigen::Index>(h), 0) = f.dot(theta);
            const double mean = f.dot(fm.mean[h]);
            const double var = f * fm.cov[h] * f.transpose() + params[k].obs_var;
            obs(static_cast<Eigen::Index>(h), 0) = mean + std::sqrt(var) * standard_normal(rng);
        }
        out.draws[r] = std::move(obs);
        out.state_draws[r] = std::move(signal);
    });
    out.summary = summarize(out.draws, lower, upper);
    return out;
}

/// Per zone: at each observed time, sqrt(mean over draws of (draw − obs)²),
/// then averaged over the zone's observed times.
inline Vector rmse_by_zone(const PanelData& observed, const std::vector<Matrix>& draws) {
    if (draws.empty()) throw ValidationError("no predictive draws");
    const Eigen::Index n = observed.values.rows();
    const Eigen::Index nz = observed.values.cols();
    for (const Matrix& d : draws)
        if (d.rows() != n || d.cols() != nz) throw ValidationError("predictive draws do not match the panel shape");
    Vector out(nz);
    for (Eigen::Index j = 0; j < nz; ++j) {
        double total = 0.0;
        long count = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!observed.observed(i, j)) continue;
            double ss = 0.0;
            for (const Matrix& d : draws) {
                const double e = d(i, j) - observed.values(i, j);
                ss += e * e;
            }
            total += std::sqrt(ss / static_cast<double>(draws.size()));
            ++count;
        }
        if (count == 0) throw ValidationError("zone " + observed.zone_ids[static_cast<std::size_t>(j)] + " has no observed points");
        out(j) = total / static_cast<double>(count);
    }
    return out;
}

/// Fraction of observed entries falling inside [lo, hi].
inline double interval_coverage(const PanelData& observed, const IntervalSummary& s) {
    long inside = 0;
    long total = 0;
    for (Eigen::Index i = 0; i < observed.values.rows(); ++i)
        for (Eigen::Index j = 0; j < observed.values.cols(); ++j) {
            if (!observed.observed(i, j)) continue;
            ++total;
            inside += observed.values(i, j) >= s.lo(i, j) && observed.values(i, j) <= s.hi(i, j);
        }
    return total ? static_cast<double>(inside) / static_cast<double>(total) : 0.0;
}

struct RmseComparison {
    std::vector<std::string> zone_ids;
    Vector single;
    Vector joint;
};

/// Per-zone within-sample RMSE of single-zone fits (one per zone, in panel
/// order) against the joint fit. All predictions must be on `panel`.
inline RmseComparison compare_rmse(const PanelData& panel, const std::vector<PredictiveDraws>& single,
                                   const PredictiveDraws& joint) {
    std::vector<std::string> v;
    if (joint.zone_ids != panel.zone_ids || joint.times != panel.grid.times())
        v.push_back("mismatched panels: joint predictions are not on the comparison panel");
    if (single.size() != panel.n_zones())
        v.push_back("mismatched panels: expected " + std::to_string(panel.n_zones()) + " single-zone fits, found " +
                    std::to_string(single.size()));
    for (std::size_t j = 0; j < single.size() && j < panel.n_zones(); ++j)
        if (single[j].zone_ids.size() != 1 || single[j].zone_ids[0] != panel.zone_ids[j] ||
            single[j].times != panel.grid.times())
            v.push_back("mismatched panels: single-zone fit " + std::to_string(j + 1) + " is not on zone " + panel.zone_ids[j]);
    if (!v.empty()) throw ValidationError(std::move(v));
    RmseComparison out{panel.zone_ids, Vector(panel.n_zones()), rmse_by_zone(panel, joint.draws)};
    for (std::size_t j = 0; j < single.size(); ++j)
        out.single(static_cast<Eigen::Index>(j)) = rmse_by_zone(panel.column(j), single[j].draws)(0);
    return out;
}

} // namespace sdlm

#endif
