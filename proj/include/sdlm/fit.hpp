#pragma once
#ifndef SDLM_FIT_HPP
#define SDLM_FIT_HPP

// Two-stage posterior simulation: random-walk Metropolis on the marginal
// posterior of the static parameters, then one forward-filter backward-sample
// pass per retained parameter draw.

#include "sdlm/error.hpp"
#include "sdlm/filter.hpp"
#include "sdlm/kernel.hpp"
#include "sdlm/mcmc.hpp"
#include "sdlm/parameters.hpp"
#include "sdlm/posterior.hpp"
#include "sdlm/random.hpp"
#include "sdlm/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

namespace sdlm {

struct FitConfig {
    McmcConfig mcmc;
    long pilot_iterations = 5000;   // per pilot round; 0 disables the pilot
    int pilot_rounds = 2;
    std::size_t ffbs_draws = 1000;
    std::size_t chains = 1;
    std::size_t threads = 1;
};

/// Evenly spaced rows selecting `wanted` of `kept` draws; the spacing is
/// floor(kept / wanted) and the last draw is always included.
inline std::vector<Eigen::Index> thin_indices(Eigen::Index kept, std::size_t wanted) {
    std::vector<Eigen::Index> rows;
    if (wanted == 0 || kept == 0) return rows;
    const Eigen::Index count = std::min<Eigen::Index>(kept, static_cast<Eigen::Index>(wanted));
    const Eigen::Index step = std::max<Eigen::Index>(1, kept / count);
    for (Eigen::Index i = 0; i < count; ++i) rows.push_back(kept - 1 - (count - 1 - i) * step);
    return rows;
}

/// Runs `work(r)` for r in [0, n) on up to `threads` threads.
template <class Work>
void parallel_for(std::size_t n, std::size_t threads, const Work& work) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t r = 0; r < n; ++r) work(r);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (std::size_t r = t; r < n; r += threads) work(r);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

namespace detail {

/// Half of the sample variance of first differences over consecutive
/// observed pairs in column j (1.0 when fewer than two pairs exist).
inline double half_diff_variance(const PanelData& panel, Eigen::Index j) {
    std::vector<double> d;
    for (Eigen::Index i = 1; i < panel.values.rows(); ++i)
        if (panel.observed(i, j) && panel.observed(i - 1, j)) d.push_back(panel.values(i, j) - panel.values(i - 1, j));
    if (d.size() < 2) return 0.5;
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(d.size());
    double s = 0.0;
    for (double v : d) s += (v - mean) * (v - mean);
    const double var = s / static_cast<double>(d.size() - 1);
    return var > 0.0 ? 0.5 * var : 0.5;
}

/// Pilot rounds followed by the main chain(s); returns the merged main output.
template <class Target>
ChainOutput pilot_then_main(const FitConfig& fit, const Target& target, const Vector& init) {
    const Eigen::Index dim = init.size();
    Vector start = init;
    McmcConfig main = fit.mcmc;
    if (fit.pilot_iterations > 0 && !main.proposal_cov) {
        Matrix cov = 0.01 * Matrix::Identity(dim, dim);
        double gamma = 1.0;
        for (int round = 0; round < std::max(1, fit.pilot_rounds); ++round) {
            McmcConfig pilot;
            pilot.iterations = fit.pilot_iterations;
            pilot.burn_in = fit.pilot_iterations / 2;
            pilot.thin = 1;
            pilot.seed = derive_seed(fit.mcmc.seed, 1000 + static_cast<std::uint64_t>(round));
            pilot.proposal_cov = cov;
            pilot.step_scale = round == 0 ? gamma : 2.38 * 2.38 / static_cast<double>(dim);
            pilot.target_acceptance = fit.mcmc.target_acceptance;
            pilot.adapt = true;
            const ChainOutput out = run_chain(pilot, target, start);
            start = out.draws.bottomRows(1).transpose();
            if (out.draws.rows() >= 10 * dim) {
                try {
                    cov = pilot_covariance(out.draws);
                } catch (const ValidationError&) {
                    cov *= 0.1;
                }
            } else {
                cov *= out.final_step_scale;
            }
        }
        main.proposal_cov = cov;
    }
    std::vector<ChainOutput> chains = run_chains(main, target, {start}, std::max<std::size_t>(1, fit.chains), fit.threads);
    if (chains.size() == 1) return std::move(chains.front());
    ChainOutput merged = chains.front();
    for (std::size_t c = 1; c < chains.size(); ++c) {
        Matrix d(merged.draws.rows() + chains[c].draws.rows(), dim);
        d << merged.draws, chains[c].draws;
        merged.draws = std::move(d);
        merged.log_posterior_trace.insert(merged.log_posterior_trace.end(), chains[c].log_posterior_trace.begin(),
                                          chains[c].log_posterior_trace.end());
        merged.accepted += chains[c].accepted;
        merged.proposed += chains[c].proposed;
    }
    merged.acceptance_rate = static_cast<double>(merged.accepted) / static_cast<double>(merged.proposed);
    return merged;
}

} // namespace detail

/// Chain starting point: θ at the GP prior means, V and W each half the
/// first-difference variance, kernel parameters at their prior medians.
inline JointStaticParams default_joint_init(const PanelData& panel, const PriorSpec& priors) {
    const auto nz = static_cast<Eigen::Index>(panel.n_zones());
    JointStaticParams p;
    p.obs_var.resize(nz);
    p.sys_var.resize(nz);
    for (Eigen::Index j = 0; j < nz; ++j) {
        p.obs_var(j) = detail::half_diff_variance(panel, j);
        p.sys_var(j) = p.obs_var(j);
    }
    p.theta1 = Vector::Constant(nz, priors.gp_mean1);
    p.theta2 = Vector::Constant(nz, priors.gp_mean2);
    const KernelParams median{std::exp(priors.log_sigma_mean), std::exp(priors.log_phi_mean)};
    p.eta1 = p.eta2 = p.eta3 = median;
    set_initial_level(p, priors);
    return p;
}

struct JointFit {
    std::vector<std::string> names;
    ChainOutput chain;        // draws in unconstrained coordinates
    Matrix natural;           // same draws on the natural scale
    std::vector<Eigen::Index> ffbs_rows;
    std::vector<JointStaticParams> ffbs_params;
    std::vector<LatentPath> paths;
    std::vector<Vector> final_mean;   // m_n per FFBS draw
    std::vector<Matrix> final_cov;    // C_n per FFBS draw
};

/// FFBS for each retained parameter draw; paths are reproducible per draw index.
inline void sample_joint_paths(JointFit& fit, const JointPosterior& posterior, std::size_t draws, std::uint64_t seed,
                               std::size_t threads) {
    const JointLayout& layout = posterior.layout();
    fit.ffbs_rows = thin_indices(fit.natural.rows(), draws);
    const std::size_t n = fit.ffbs_rows.size();
    fit.ffbs_params.resize(n);
    fit.paths.resize(n);
    fit.final_mean.resize(n);
    fit.final_cov.resize(n);
    parallel_for(n, threads, [&](std::size_t r) {
        JointStaticParams p = layout.unpack(fit.natural.row(fit.ffbs_rows[r]).transpose(), posterior.priors());
        const CovMatrix K3 = kernel_matrix(posterior.geometry(), p.eta3, posterior.options().kernel);
        const PanelData x = detrend(posterior.panel(), p.theta1, p.theta2, posterior.options().harmonic);
        const FilterResult f = forward_filter_joint(x, p, K3);
        Rng rng(derive_seed(seed, r));
        fit.paths[r] = backward_sample(f.trajectory, rng);
        fit.final_mean[r] = f.trajectory.final_mean();
        fit.final_cov[r] = f.trajectory.final_cov();
        fit.ffbs_params[r] = std::move(p);
    });
}

inline JointFit two_stage_fit(const PanelData& panel, const ZoneGeometry& geometry, const PriorSpec& priors,
                              const ModelOptions& options, const FitConfig& config,
                              std::optional<JointStaticParams> init = std::nullopt) {
    const JointPosterior posterior(panel, geometry, priors, options);
    const JointLayout& layout = posterior.layout();
    const JointStaticParams start = init ? *init : default_joint_init(panel, priors);
    Vector u0 = layout.to_unconstrained(layout.pack(start));
    if (!std::isfinite(posterior(u0))) throw NumericalError("initial parameter value has non-finite posterior");

    JointFit fit;
    fit.names = layout.names();
    fit.chain = detail::pilot_then_main(config, posterior, u0);
    fit.natural.resize(fit.chain.draws.rows(), fit.chain.draws.cols());
    for (Eigen::Index r = 0; r < fit.chain.draws.rows(); ++r)
        fit.natural.row(r) = layout.from_unconstrained(fit.chain.draws.row(r).transpose()).transpose();
    sample_joint_paths(fit, posterior, config.ffbs_draws, derive_seed(config.mcmc.seed, 77), config.threads);
    return fit;
}

// ---------------------------------------------------------------------------
// Single-zone model

/// V from half the first-difference variance, W3 the other half, W1 = W2 = W3 / 10.
inline SingleZoneParams default_single_init(const PanelData& zone_panel, const SingleZoneParams& base = {}) {
    SingleZoneParams p = base;
    const double h = detail::half_diff_variance(zone_panel, 0);
    p.obs_var = h;
    p.sys_var = Eigen::Vector3d(h / 10.0, h / 10.0, h);
    return p;
}

struct SingleZoneFit {
    ChainOutput chain;        // log-variance coordinates
    Matrix natural;           // V, W1, W2, W3
    std::vector<Eigen::Index> ffbs_rows;
    std::vector<SingleZoneParams> ffbs_params;
    std::vector<LatentPath> paths;    // columns θ1, θ2, θ3
    std::vector<Vector> final_mean;
    std::vector<Matrix> final_cov;
};

inline SingleZoneFit single_zone_fit(const PanelData& zone_panel, const PriorSpec& priors, const HarmonicConfig& harmonic,
                                     const FitConfig& config, const SingleZoneParams& base = {}) {
    const SingleZonePosterior posterior(zone_panel, priors, harmonic, base);
    const Vector u0 = SingleZoneLayout::to_unconstrained(SingleZoneLayout::pack(default_single_init(zone_panel, base)));
    if (!std::isfinite(posterior(u0))) throw NumericalError("initial parameter value has non-finite posterior");
    SingleZoneFit fit;
    fit.chain = detail::pilot_then_main(config, posterior, u0);
    fit.natural = fit.chain.draws.array().exp();
    fit.ffbs_rows = thin_indices(fit.natural.rows(), config.ffbs_draws);
    const std::size_t n = fit.ffbs_rows.size();
    fit.ffbs_params.resize(n);
    fit.paths.resize(n);
    fit.final_mean.resize(n);
    fit.final_cov.resize(n);
    const std::uint64_t seed = derive_seed(config.mcmc.seed, 77);
    parallel_for(n, config.threads, [&](std::size_t r) {
        SingleZoneParams p = SingleZoneLayout::unpack(fit.natural.row(fit.ffbs_rows[r]).transpose(), base);
        const FilterResult f = forward_filter_single(zone_panel, p, harmonic);
        Rng rng(derive_seed(seed, r));
        fit.paths[r] = backward_sample(f.trajectory, rng);
        fit.final_mean[r] = f.trajectory.final_mean();
        fit.final_cov[r] = f.trajectory.final_cov();
        fit.ffbs_params[r] = p;
    });
    return fit;
}

} // namespace sdlm

#endif
