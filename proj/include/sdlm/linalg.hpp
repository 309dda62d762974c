#pragma once
#ifndef SDLM_LINALG_HPP
#define SDLM_LINALG_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <optional>

namespace sdlm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline void symmetrize(Matrix& m) {
    m = 0.5 * (m + m.transpose()).eval();
}

inline double log_det(const Eigen::LLT<Matrix>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

/// log N(x; mean, LLᵀ) given a successful factorization.
inline double mvn_log_density(const Vector& x, const Vector& mean, const Eigen::LLT<Matrix>& llt) {
    const Vector z = llt.matrixL().solve(x - mean);
    return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + log_det(llt) + z.squaredNorm());
}

inline double normal_log_density(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

inline double min_eigenvalue(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// Returns S with S Sᵀ = m for symmetric positive semi-definite m. Uses the
/// Cholesky factor when it exists and a pivoted LDLᵀ with clamped pivots when
/// m is singular (e.g. an exactly pinned state).
inline Matrix psd_factor(const Matrix& m) {
    Matrix sym = 0.5 * (m + m.transpose());
    Eigen::LLT<Matrix> llt(sym);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::LDLT<Matrix> ldlt(sym);
    Vector d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
    Matrix l = ldlt.matrixL();
    Matrix factor = l * d.asDiagonal();
    return ldlt.transpositionsP().transpose() * factor;
}

} // namespace sdlm

#endif
