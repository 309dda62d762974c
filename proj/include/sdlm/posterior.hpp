#pragma once
#ifndef SDLM_POSTERIOR_HPP
#define SDLM_POSTERIOR_HPP

#include "sdlm/error.hpp"
#include "sdlm/filter.hpp"
#include "sdlm/kernel.hpp"
#include "sdlm/model.hpp"
#include "sdlm/parameters.hpp"

#include <cmath>
#include <limits>

namespace sdlm {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Log-density of a variance v whose precision 1/v ~ Gamma(shape, rate).
inline double log_prior_variance(double v, double shape, double rate) {
    if (!(v > 0.0)) return kNegInf;
    const double tau = 1.0 / v;
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(tau) - rate * tau - 2.0 * std::log(v);
}

/// Log-density of x > 0 with log x ~ N(mean, sd²).
inline double log_prior_lognormal(double x, double mean, double sd) {
    if (!(x > 0.0)) return kNegInf;
    const double lx = std::log(x);
    return normal_log_density(lx, mean, sd * sd) - lx;
}

/// Marginal posterior of the joint model's static parameters, up to a constant.
class JointPosterior {
public:
    JointPosterior(PanelData panel, ZoneGeometry geometry, PriorSpec priors, ModelOptions options = {})
        : panel_(std::move(panel)), geometry_(std::move(geometry)), priors_(priors), options_(options),
          layout_(panel_.n_zones()) {
        if (geometry_.size() != panel_.n_zones())
            throw ValidationError("dimension mismatch: geometry has " + std::to_string(geometry_.size()) +
                                  " zones, panel has " + std::to_string(panel_.n_zones()));
    }

    const PanelData& panel() const noexcept { return panel_; }
    const ZoneGeometry& geometry() const noexcept { return geometry_; }
    const PriorSpec& priors() const noexcept { return priors_; }
    const ModelOptions& options() const noexcept { return options_; }
    const JointLayout& layout() const noexcept { return layout_; }

    /// Sum of all prior terms at natural-scale parameters.
    double log_prior(const JointStaticParams& p) const {
        const auto nz = static_cast<Eigen::Index>(panel_.n_zones());
        double lp = 0.0;
        for (Eigen::Index j = 0; j < nz; ++j) {
            lp += log_prior_variance(p.obs_var(j), priors_.precision_shape, priors_.precision_rate);
            lp += log_prior_variance(p.sys_var(j), priors_.precision_shape, priors_.precision_rate);
        }
        for (const KernelParams* eta : {&p.eta1, &p.eta2, &p.eta3}) {
            lp += log_prior_lognormal(eta->sigma, priors_.log_sigma_mean, priors_.log_sigma_sd);
            lp += log_prior_lognormal(eta->phi, priors_.log_phi_mean, priors_.log_phi_sd);
        }
        if (!std::isfinite(lp)) return kNegInf;
        const CovMatrix K1 = kernel_matrix(geometry_, p.eta1, options_.kernel);
        const CovMatrix K2 = kernel_matrix(geometry_, p.eta2, options_.kernel);
        lp += gp_log_density(p.theta1, Vector::Constant(nz, priors_.gp_mean1), K1);
        lp += gp_log_density(p.theta2, Vector::Constant(nz, priors_.gp_mean2), K2);
        return lp;
    }

    double log_likelihood(const JointStaticParams& p) const {
        const CovMatrix K3 = kernel_matrix(geometry_, p.eta3, options_.kernel);
        const PanelData x = detrend(panel_, p.theta1, p.theta2, options_.harmonic);
        return forward_filter_joint(x, p, K3, false).log_likelihood;
    }

    /// log π(ψ | x) + const in natural coordinates. Any numerical failure
    /// (singular kernel, non-finite filter step) yields −∞.
    double log_posterior(const JointStaticParams& p) const {
        try {
            const double lp = log_prior(p);
            if (!std::isfinite(lp)) return kNegInf;
            const double ll = log_likelihood(p);
            return std::isfinite(ll) ? lp + ll : kNegInf;
        } catch (const NumericalError&) {
            return kNegInf;
        }
    }

    /// Target in unconstrained coordinates, including the log-Jacobian.
    double operator()(const Vector& u) const {
        if (!u.allFinite()) return kNegInf;
        const Vector x = layout_.from_unconstrained(u);
        if (!x.allFinite() || (x.array() == 0.0).any()) return kNegInf;
        return log_posterior(layout_.unpack(x, priors_)) + layout_.log_jacobian(u);
    }

private:
    PanelData panel_;
    ZoneGeometry geometry_;
    PriorSpec priors_;
    ModelOptions options_;
    JointLayout layout_;
};

/// Log posterior of (V, W1, W2, W3) for one zone under independent
/// Gamma priors on the precisions.
class SingleZonePosterior {
public:
    SingleZonePosterior(PanelData panel, PriorSpec priors, HarmonicConfig harmonic = {}, SingleZoneParams base = {})
        : panel_(std::move(panel)), priors_(priors), harmonic_(harmonic), base_(std::move(base)) {
        if (panel_.n_zones() != 1) throw ValidationError("single-zone posterior needs a one-column panel");
    }

    const PanelData& panel() const noexcept { return panel_; }
    const SingleZoneParams& base() const noexcept { return base_; }
    const HarmonicConfig& harmonic() const noexcept { return harmonic_; }

    double log_posterior(const SingleZoneParams& p) const {
        double lp = log_prior_variance(p.obs_var, priors_.precision_shape, priors_.precision_rate);
        for (int k = 0; k < 3; ++k) lp += log_prior_variance(p.sys_var(k), priors_.precision_shape, priors_.precision_rate);
        if (!std::isfinite(lp)) return kNegInf;
        try {
            const double ll = forward_filter_single(panel_, p, harmonic_, false).log_likelihood;
            return std::isfinite(ll) ? lp + ll : kNegInf;
        } catch (const NumericalError&) {
            return kNegInf;
        }
    }

    double operator()(const Vector& u) const {
        if (!u.allFinite()) return kNegInf;
        const Vector x = SingleZoneLayout::from_unconstrained(u);
        if (!x.allFinite() || (x.array() == 0.0).any()) return kNegInf;
        return log_posterior(SingleZoneLayout::unpack(x, base_)) + SingleZoneLayout::log_jacobian(u);
    }

private:
    PanelData panel_;
    PriorSpec priors_;
    HarmonicConfig harmonic_;
    SingleZoneParams base_;
};

} // namespace sdlm

#endif
