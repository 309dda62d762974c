#pragma once
#ifndef SDLM_PARAMETERS_HPP
#define SDLM_PARAMETERS_HPP

// Flat vector layouts of the static parameters, in natural and unconstrained
// (log for positive quantities, identity otherwise) coordinates.
//
// Joint layout (n_z zones, dimension 4 n_z + 6):
//   V_1..V_nz, W_1..W_nz, theta1_1..theta1_nz, theta2_1..theta2_nz,
//   sigma_1, phi_1, sigma_2, phi_2, sigma_3, phi_3
// Single-zone layout (dimension 4): V, W_1, W_2, W_3

#include "sdlm/error.hpp"
#include "sdlm/filter.hpp"
#include "sdlm/model.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace sdlm {

class JointLayout {
public:
    explicit JointLayout(std::size_t n_zones) : nz_(static_cast<Eigen::Index>(n_zones)) {}

    Eigen::Index n_zones() const noexcept { return nz_; }
    Eigen::Index dim() const noexcept { return 4 * nz_ + 6; }

    /// True for coordinates that are mapped through log.
    bool is_log_scale(Eigen::Index k) const noexcept { return k < 2 * nz_ || k >= 4 * nz_; }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        const char* blocks[] = {"V_", "W_", "theta1_", "theta2_"};
        for (const char* b : blocks)
            for (Eigen::Index j = 0; j < nz_; ++j) out.push_back(b + std::to_string(j + 1));
        for (int k = 1; k <= 3; ++k) {
            out.push_back("sigma_" + std::to_string(k));
            out.push_back("phi_" + std::to_string(k));
        }
        return out;
    }

    Vector pack(const JointStaticParams& p) const {
        check_size(p);
        Vector x(dim());
        x << p.obs_var, p.sys_var, p.theta1, p.theta2, p.eta1.sigma, p.eta1.phi, p.eta2.sigma, p.eta2.phi, p.eta3.sigma,
            p.eta3.phi;
        return x;
    }

    /// Natural-coordinate vector to parameters. The initial level
    /// distribution is taken from `priors`.
    JointStaticParams unpack(const Vector& x, const PriorSpec& priors) const {
        JointStaticParams p;
        p.obs_var = x.segment(0, nz_);
        p.sys_var = x.segment(nz_, nz_);
        p.theta1 = x.segment(2 * nz_, nz_);
        p.theta2 = x.segment(3 * nz_, nz_);
        const Eigen::Index o = 4 * nz_;
        p.eta1 = {x(o), x(o + 1)};
        p.eta2 = {x(o + 2), x(o + 3)};
        p.eta3 = {x(o + 4), x(o + 5)};
        set_initial_level(p, priors);
        return p;
    }

    Vector to_unconstrained(const Vector& natural) const {
        Vector u = natural;
        for (Eigen::Index k = 0; k < dim(); ++k)
            if (is_log_scale(k)) {
                if (!(natural(k) > 0.0)) throw ValidationError("non-positive value for log-scale parameter " + names()[static_cast<std::size_t>(k)]);
                u(k) = std::log(natural(k));
            }
        return u;
    }

    Vector from_unconstrained(const Vector& u) const {
        Vector x = u;
        for (Eigen::Index k = 0; k < dim(); ++k)
            if (is_log_scale(k)) x(k) = std::exp(u(k));
        return x;
    }

    /// log |d natural / d unconstrained| = sum of log-scale coordinates.
    double log_jacobian(const Vector& u) const {
        double s = 0.0;
        for (Eigen::Index k = 0; k < dim(); ++k)
            if (is_log_scale(k)) s += u(k);
        return s;
    }

private:
    void check_size(const JointStaticParams& p) const {
        if (p.obs_var.size() != nz_ || p.sys_var.size() != nz_ || p.theta1.size() != nz_ || p.theta2.size() != nz_)
            throw ValidationError("parameter vector sizes do not match " + std::to_string(nz_) + " zones");
    }

    Eigen::Index nz_;
};

inline Vector to_unconstrained(const JointStaticParams& p) {
    const JointLayout layout(p.n_zones());
    return layout.to_unconstrained(layout.pack(p));
}

inline JointStaticParams from_unconstrained(const Vector& u, std::size_t n_zones, const PriorSpec& priors) {
    const JointLayout layout(n_zones);
    return layout.unpack(layout.from_unconstrained(u), priors);
}

/// Single-zone layout: all four coordinates are variances on the log scale.
struct SingleZoneLayout {
    static constexpr Eigen::Index dim() { return 4; }

    static std::vector<std::string> names() { return {"V", "W_1", "W_2", "W_3"}; }

    static Vector pack(const SingleZoneParams& p) {
        Vector x(4);
        x << p.obs_var, p.sys_var;
        return x;
    }

    static SingleZoneParams unpack(const Vector& x, const SingleZoneParams& base = {}) {
        SingleZoneParams p = base;
        p.obs_var = x(0);
        p.sys_var = x.segment<3>(1);
        return p;
    }

    static Vector to_unconstrained(const Vector& natural) {
        if ((natural.array() <= 0.0).any()) throw ValidationError("non-positive single-zone variance");
        return natural.array().log();
    }
    static Vector from_unconstrained(const Vector& u) { return u.array().exp(); }
    static double log_jacobian(const Vector& u) { return u.sum(); }
};

} // namespace sdlm

#endif
