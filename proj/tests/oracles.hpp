#pragma once

// Test-only reference computations. These evaluate the model by assembling
// the full joint Gaussian of (states, observations) over all time points and
// using explicit dense inverses/determinants, independently of the
// recursive filter and sampler.

#include "sdlm/model.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace sdlm::oracle {

/// Random-walk state model: θ_0 ~ N(m0, C0), θ_i = θ_{i-1} + ε_i,
/// ε_i ~ N(0, gap_sq[i] · base), x_i = F_i θ_i + ν, ν ~ N(0, diag(obs_var)).
struct DenseModel {
    Vector m0;
    Matrix C0;
    Matrix base;
    std::vector<double> gap_sq;
    std::vector<Matrix> F;  // per step, q x p (q = rows of the full observation vector)
    Vector obs_var;         // length q
};

struct StackedGaussian {
    Vector state_mean;   // (n+1) p
    Matrix state_cov;
    Vector obs_mean;     // stacked observed entries
    Matrix obs_cov;
    Matrix cross;        // Cov(states, observed)
    Vector y;            // stacked observed values
};

inline StackedGaussian assemble(const DenseModel& model, const Matrix& values, const BoolMatrix& observed) {
    const std::size_t n = model.gap_sq.size();
    const Eigen::Index p = model.m0.size();
    const auto N = static_cast<Eigen::Index>((n + 1) * static_cast<std::size_t>(p));
    StackedGaussian g;
    g.state_mean = model.m0.replicate(static_cast<Eigen::Index>(n + 1), 1);
    // Cov(θ_i, θ_k) = C0 + sum_{l <= min(i,k)} gap_sq[l-1] base
    std::vector<Matrix> cum(n + 1);
    cum[0] = model.C0;
    for (std::size_t i = 1; i <= n; ++i) cum[i] = cum[i - 1] + model.gap_sq[i - 1] * model.base;
    g.state_cov.resize(N, N);
    for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t k = 0; k <= n; ++k)
            g.state_cov.block(static_cast<Eigen::Index>(i) * p, static_cast<Eigen::Index>(k) * p, p, p) = cum[std::min(i, k)];

    // Observation selection: rows of the stacked operator H so that y = H θ + ν.
    std::vector<Eigen::RowVectorXd> rows;
    std::vector<double> noise;
    std::vector<double> ys;
    for (std::size_t i = 0; i < n; ++i) {
        const Matrix& F = model.F[i];
        for (Eigen::Index a = 0; a < F.rows(); ++a) {
            if (!observed(static_cast<Eigen::Index>(i), a)) continue;
            Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(N);
            h.segment(static_cast<Eigen::Index>(i + 1) * p, p) = F.row(a);
            rows.push_back(h);
            noise.push_back(model.obs_var(a));
            ys.push_back(values(static_cast<Eigen::Index>(i), a));
        }
    }
    const auto q = static_cast<Eigen::Index>(rows.size());
    Matrix H(q, N);
    for (Eigen::Index r = 0; r < q; ++r) H.row(r) = rows[static_cast<std::size_t>(r)];
    g.y = Eigen::Map<Vector>(ys.data(), q);
    g.obs_mean = H * g.state_mean;
    g.obs_cov = H * g.state_cov * H.transpose();
    for (Eigen::Index r = 0; r < q; ++r) g.obs_cov(r, r) += noise[static_cast<std::size_t>(r)];
    g.cross = g.state_cov * H.transpose();
    return g;
}

/// log N(y; mean, cov) via explicit inverse and determinant.
inline double dense_log_density(const Vector& y, const Vector& mean, const Matrix& cov) {
    const Vector d = y - mean;
    const double quad = d.dot(cov.inverse() * d);
    return -0.5 * (static_cast<double>(y.size()) * std::log(2.0 * M_PI) + std::log(cov.determinant()) + quad);
}

inline double log_likelihood(const DenseModel& model, const Matrix& values, const BoolMatrix& observed) {
    const StackedGaussian g = assemble(model, values, observed);
    if (g.y.size() == 0) return 0.0;
    return dense_log_density(g.y, g.obs_mean, g.obs_cov);
}

/// Exact smoothing distribution of the stacked state vector given the data.
struct Smoothed {
    Vector mean;
    Matrix cov;
};

inline Smoothed smooth(const DenseModel& model, const Matrix& values, const BoolMatrix& observed) {
    const StackedGaussian g = assemble(model, values, observed);
    const Matrix inv = g.obs_cov.inverse();
    Smoothed s;
    s.mean = g.state_mean + g.cross * inv * (g.y - g.obs_mean);
    s.cov = g.state_cov - g.cross * inv * g.cross.transpose();
    return s;
}

/// Joint detrended level model (F = I) in dense form.
inline DenseModel joint_levels(const Vector& m0, const Matrix& C0, const Matrix& base, const TimeGrid& grid,
                               const Vector& obs_var) {
    DenseModel m{m0, C0, base, {}, {}, obs_var};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        m.gap_sq.push_back(grid.gap_squared(i));
        m.F.push_back(Matrix::Identity(m0.size(), m0.size()));
    }
    return m;
}

/// Single-zone harmonic model in dense form.
inline DenseModel single_zone(const Vector& m0, const Matrix& C0, const Vector& W, const TimeGrid& grid, double V,
                              double period) {
    DenseModel m{m0, C0, Matrix(W.asDiagonal()), {}, {}, Vector::Constant(1, V)};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        m.gap_sq.push_back(grid.gap_squared(i));
        const double t = grid.times()[i];
        Matrix F(1, 3);
        F << std::sin(2 * M_PI * t / period), std::cos(2 * M_PI * t / period), 1.0;
        m.F.push_back(F);
    }
    return m;
}

/// Two-sided Kolmogorov distribution survival function P(K > x).
inline double kolmogorov_sf(double x) {
    if (x <= 0.0) return 1.0;
    double s = 0.0;
    for (int k = 1; k < 200; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        s += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

} // namespace sdlm::oracle
