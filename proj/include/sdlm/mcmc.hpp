#pragma once
#ifndef SDLM_MCMC_HPP
#define SDLM_MCMC_HPP

// Random-walk Metropolis over an unconstrained coordinate vector.

#include "sdlm/error.hpp"
#include "sdlm/linalg.hpp"
#include "sdlm/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

namespace sdlm {

struct McmcConfig {
    long iterations = 22000;        // total, burn-in included
    long burn_in = 2000;
    long thin = 1;
    double step_scale = 0.0;        // γ; <= 0 selects 2.38² / dim
    std::optional<Matrix> proposal_cov;  // Σ; identity when absent
    std::uint64_t seed = 1;
    double target_acceptance = 0.25;
    bool adapt = true;              // tune γ toward target_acceptance during burn-in only

    double resolved_step_scale(Eigen::Index dim) const {
        return step_scale > 0.0 ? step_scale : 2.38 * 2.38 / static_cast<double>(dim);
    }

    void validate(Eigen::Index dim) const {
        std::vector<std::string> v;
        if (iterations <= 0) v.push_back("iterations must be positive");
        if (burn_in < 0 || burn_in >= iterations) v.push_back("burn_in must satisfy 0 <= burn_in < iterations");
        if (thin < 1) v.push_back("thin must be >= 1");
        if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) v.push_back("target_acceptance must lie in (0, 1)");
        if (proposal_cov) {
            const Matrix& s = *proposal_cov;
            if (s.rows() != dim || s.cols() != dim) v.push_back("proposal_cov has the wrong dimension");
            else if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + s.cwiseAbs().maxCoeff()))
                v.push_back("proposal_cov is not symmetric");
            else if (min_eigenvalue(s) < -1e-12 * (1.0 + s.cwiseAbs().maxCoeff()))
                v.push_back("proposal_cov is not positive semi-definite");
        }
        if (!v.empty()) throw ValidationError(std::move(v));
    }
};

struct ChainOutput {
    Matrix draws;                     // kept iterations x dim, in the sampled coordinates
    std::vector<double> log_posterior_trace;
    long accepted = 0;                // post burn-in
    long proposed = 0;                // post burn-in
    double acceptance_rate = 0.0;     // accepted / proposed
    double burn_in_acceptance_rate = 0.0;
    double final_step_scale = 0.0;
    McmcConfig config;
};

/// Metropolis with proposal N(current, γΣ). `target` returns the log density
/// (up to a constant) and may return −∞ to reject.
template <class Target>
ChainOutput run_chain(const McmcConfig& config, const Target& target, const Vector& init) {
    const Eigen::Index dim = init.size();
    config.validate(dim);
    double current_lp = target(init);
    if (!std::isfinite(current_lp)) throw ValidationError("chain initial value has non-finite log posterior");

    const Matrix sigma = config.proposal_cov ? *config.proposal_cov : Matrix(Matrix::Identity(dim, dim));
    const Matrix factor = psd_factor(sigma);
    double log_gamma = std::log(config.resolved_step_scale(dim));

    Rng rng(config.seed);
    ChainOutput out;
    out.config = config;
    const long kept = (config.iterations - config.burn_in) / config.thin;
    out.draws.resize(kept, dim);
    out.log_posterior_trace.reserve(static_cast<std::size_t>(kept));

    Vector current = init;
    long burn_accepted = 0;
    long row = 0;
    for (long it = 0; it < config.iterations; ++it) {
        const bool burning = it < config.burn_in;
        const Vector proposal = current + std::exp(0.5 * log_gamma) * (factor * standard_normal_vector(dim, rng));
        const double proposal_lp = target(proposal);
        const double log_ratio = proposal_lp - current_lp;
        const double alpha = std::isfinite(proposal_lp) ? (log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio)) : 0.0;
        const bool accept = std::isfinite(proposal_lp) && (log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio);
        if (accept) {
            current = proposal;
            current_lp = proposal_lp;
        }
        if (burning) {
            burn_accepted += accept;
            if (config.adapt)
                log_gamma += (alpha - config.target_acceptance) / std::pow(static_cast<double>(it + 1), 0.6);
        } else {
            ++out.proposed;
            out.accepted += accept;
            const long since = it - config.burn_in;
            if ((since + 1) % config.thin == 0 && row < kept) {
                out.draws.row(row++) = current.transpose();
                out.log_posterior_trace.push_back(current_lp);
            }
        }
    }
    out.acceptance_rate = out.proposed ? static_cast<double>(out.accepted) / static_cast<double>(out.proposed) : 0.0;
    out.burn_in_acceptance_rate =
        config.burn_in ? static_cast<double>(burn_accepted) / static_cast<double>(config.burn_in) : 0.0;
    out.final_step_scale = std::exp(log_gamma);
    return out;
}

/// Runs `n_chains` chains with seeds derived from config.seed, at most
/// `threads` at a time. Each chain starts from inits[c % inits.size()].
template <class Target>
std::vector<ChainOutput> run_chains(const McmcConfig& config, const Target& target, const std::vector<Vector>& inits,
                                    std::size_t n_chains, std::size_t threads = 1) {
    std::vector<ChainOutput> out(n_chains);
    std::vector<std::exception_ptr> errors(n_chains);
    auto work = [&](std::size_t c) {
        try {
            McmcConfig cc = config;
            cc.seed = n_chains == 1 ? config.seed : derive_seed(config.seed, c);
            out[c] = run_chain(cc, target, inits[c % inits.size()]);
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };
    threads = std::max<std::size_t>(1, threads);
    for (std::size_t start = 0; start < n_chains; start += threads) {
        std::vector<std::thread> pool;
        for (std::size_t c = start; c < std::min(n_chains, start + threads); ++c) {
            if (threads == 1) work(c);
            else pool.emplace_back(work, c);
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

/// Sample covariance of the rows of `draws`, shrunk toward its diagonal by
/// 0.1 and jittered by 1e-8 I.
inline Matrix pilot_covariance(const Matrix& draws) {
    const Eigen::Index n = draws.rows();
    const Eigen::Index d = draws.cols();
    if (n < 10 * d) throw ValidationError("pilot covariance needs at least 10 x dim draws");
    const Vector mean = draws.colwise().mean();
    const Matrix centred = draws.rowwise() - mean.transpose();
    Matrix s = centred.transpose() * centred / static_cast<double>(n - 1);
    if ((s.diagonal().array() <= 0.0).any()) throw ValidationError("pilot draws are rank-deficient (constant coordinate)");
    Matrix shrunk = 0.9 * s;
    shrunk.diagonal() += 0.1 * s.diagonal();
    shrunk.diagonal().array() += 1e-8;
    symmetrize(shrunk);
    return shrunk;
}

/// Effective sample size by Geyer's initial positive sequence.
inline double effective_sample_size(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n < 4) return static_cast<double>(n);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    auto autocov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
        return s / static_cast<double>(n);
    };
    const double c0 = autocov(0);
    if (c0 <= 0.0) return static_cast<double>(n);
    double sum = 0.0;
    for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
        const double pair = autocov(2 * k) + autocov(2 * k + 1);
        if (pair <= 0.0) break;
        sum += pair;
    }
    const double tau = std::max(1.0, 2.0 * sum / c0 - 1.0);
    return static_cast<double>(n) / tau;
}

} // namespace sdlm

#endif
