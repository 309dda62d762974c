#include "sdlm/filter.hpp"
#include "sdlm/simulate.hpp"

#include "oracles.hpp"
#include "test_helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace sdlm;

namespace {

PanelData one_point(double value, bool observed = true) {
    PanelData p;
    p.grid = TimeGrid::regular(1);
    p.zone_ids = {"z"};
    p.values = Matrix::Constant(1, 1, value);
    p.observed = BoolMatrix::Constant(1, 1, observed);
    return p;
}

/// Reference partially observed Kalman update written with an explicit
/// incidence matrix and dense inverses.
FilterResult incidence_reference(const PanelData& x, const Vector& V, const Matrix& base, const Vector& m0, const Matrix& C0) {
    FilterResult out;
    Vector m = m0;
    Matrix C = C0;
    for (Eigen::Index i = 0; i < x.values.rows(); ++i) {
        const Matrix R = C + x.grid.gap_squared(static_cast<std::size_t>(i)) * base;
        const Matrix P = incidence(x.observed, i).rows;
        double ll = 0.0;
        if (P.rows() == 0) {
            C = R;
        } else {
            const Matrix Q = P * (R + Matrix(V.asDiagonal())) * P.transpose();
            const Matrix Qinv = Q.inverse();
            const Vector y = P * x.values.row(i).transpose().unaryExpr([](double v) { return std::isfinite(v) ? v : 0.0; });
            const Vector e = y - P * m;
            const Matrix A = R * P.transpose() * Qinv;
            ll = -0.5 * (static_cast<double>(P.rows()) * std::log(2 * M_PI) + std::log(Q.determinant()) + e.dot(Qinv * e));
            m = m + A * e;
            C = R - A * Q * A.transpose();
        }
        out.log_likelihood += ll;
        out.trajectory.m.push_back(m);
        out.trajectory.C.push_back(C);
        out.trajectory.loglik.push_back(ll);
    }
    return out;
}

} // namespace

TEST(Detrend, ZeroHarmonicIsIdentity) {
    Rng rng(1);
    const PanelData p = test::random_panel(12, 3, rng, 0.2);
    const PanelData d = detrend(p, Vector::Zero(3), Vector::Zero(3), {});
    EXPECT_TRUE(d.values.isApprox(p.values));
    EXPECT_EQ(d.observed, p.observed);
}

TEST(Detrend, ConstantPanelAtFullPeriodsVanishes) {
    PanelData p;
    p.grid = TimeGrid::from_times({12, 24, 36});
    p.zone_ids = {"a"};
    p.values = Matrix::Constant(3, 1, 2.5);
    p.observed = BoolMatrix::Constant(3, 1, true);
    const PanelData d = detrend(p, Vector::Zero(1), Vector::Constant(1, 2.5), {12.0});
    EXPECT_NEAR(d.values.cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(Detrend, RoundTripRecoversPanel) {
    Rng rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        const PanelData p = test::random_panel(30, 3, rng, 0.1);
        const Vector t1 = standard_normal_vector(3, rng);
        const Vector t2 = standard_normal_vector(3, rng);
        const PanelData back = retrend(detrend(p, t1, t2, {}), t1, t2, {});
        for (Eigen::Index i = 0; i < 30; ++i)
            for (Eigen::Index j = 0; j < 3; ++j)
                if (p.observed(i, j)) EXPECT_NEAR(back.values(i, j), p.values(i, j), 1e-12);
    }
}

TEST(Incidence, FiveZonesWithSecondAndThirdMissing) {
    const IncidenceMatrix P = incidence({true, false, false, true, true});
    Matrix expected(3, 5);
    expected << 1, 0, 0, 0, 0,
                0, 0, 0, 1, 0,
                0, 0, 0, 0, 1;
    EXPECT_EQ(P.rows, expected);
}

TEST(Incidence, AllAndNoneObserved) {
    EXPECT_EQ(incidence(std::vector<bool>(4, true)).rows, Matrix(Matrix::Identity(4, 4)));
    const IncidenceMatrix none = incidence(std::vector<bool>(4, false));
    EXPECT_EQ(none.n_obs(), 0);
    EXPECT_EQ(none.rows.cols(), 4);
}

TEST(ForwardFilterJoint, OneStepHandAlgebra) {
    const FilterResult f = forward_filter_levels(one_point(0.0), Vector::Ones(1), Matrix::Ones(1, 1), Vector::Zero(1),
                                                 Matrix::Ones(1, 1));
    EXPECT_NEAR(f.log_likelihood, -0.5 * std::log(2 * M_PI * 3.0), 1e-14);
    EXPECT_NEAR(f.trajectory.m[0](0), 0.0, 1e-15);
    EXPECT_NEAR(f.trajectory.C[0](0, 0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(f.trajectory.R[0](0, 0), 2.0, 1e-15);
}

TEST(ForwardFilterJoint, FullyMissingStepIsPureTimeUpdate) {
    const FilterResult f = forward_filter_levels(one_point(123.0, false), Vector::Ones(1), Matrix::Constant(1, 1, 0.5),
                                                 Vector::Constant(1, 4.0), Matrix::Ones(1, 1));
    EXPECT_EQ(f.log_likelihood, 0.0);
    EXPECT_EQ(f.trajectory.m[0](0), 4.0);
    EXPECT_EQ(f.trajectory.C[0](0, 0), 1.5);
    EXPECT_EQ(f.trajectory.C[0], f.trajectory.R[0]);
}

TEST(ForwardFilterJoint, MatchesStackedGaussianOracle) {
    Rng rng(4);
    const std::size_t n = 4, nz = 2;
    const PanelData x = test::random_panel(n, nz, rng, 0.25);
    const JointStaticParams p = test::random_params(nz, rng);
    const ZoneGeometry g = test::random_geometry(nz, rng);
    const CovMatrix K3 = kernel_matrix(g, p.eta3);
    const double ll = forward_filter_joint(x, p, K3).log_likelihood;
    const auto model = oracle::joint_levels(p.init_mean, p.init_var, joint_system_base(p.sys_var, K3), x.grid, p.obs_var);
    EXPECT_NEAR(ll, oracle::log_likelihood(model, x.values, x.observed), 1e-9 * std::abs(ll));
}

TEST(ForwardFilterJoint, IrregularGridMatchesOracle) {
    Rng rng(40);
    PanelData x = test::random_panel(5, 3, rng, 0.2);
    x.grid = TimeGrid::from_times({1.0, 2.5, 3.0, 6.0, 7.0});
    const JointStaticParams p = test::random_params(3, rng);
    const CovMatrix K3 = kernel_matrix(test::random_geometry(3, rng), p.eta3);
    const double ll = forward_filter_joint(x, p, K3).log_likelihood;
    const auto model = oracle::joint_levels(p.init_mean, p.init_var, joint_system_base(p.sys_var, K3), x.grid, p.obs_var);
    EXPECT_NEAR(ll, oracle::log_likelihood(model, x.values, x.observed), 1e-9 * std::abs(ll));
}

TEST(ForwardFilterSingle, MatchesStackedGaussianOracle) {
    Rng rng(5);
    const PanelData x = test::random_panel(3, 1, rng);
    const Vector W = Vector::NullaryExpr(3, [&] { return test::uniform(rng, 0.1, 1.0); });
    const SingleZoneParams defaults;
    const double V = 0.7;
    const double ll = forward_filter_single(x, V, W, defaults.init_mean, defaults.init_var, {}).log_likelihood;
    const auto model = oracle::single_zone(defaults.init_mean, defaults.init_var, W, x.grid, V, 12.0);
    EXPECT_NEAR(ll, oracle::log_likelihood(model, x.values, x.observed), 1e-10 * std::abs(ll));
}

TEST(ForwardFilterSingle, DefaultInitialisation) {
    const SingleZoneParams p;
    EXPECT_EQ(p.init_mean, Eigen::Vector3d(1.5, 1.5, 6.0));
    EXPECT_EQ(Eigen::Vector3d(p.init_var.diagonal()), Eigen::Vector3d(1.5, 1.5, 20.0));
    EXPECT_EQ((p.init_var - Eigen::Matrix3d(p.init_var.diagonal().asDiagonal())).norm(), 0.0);
}

TEST(ForwardFilterSingle, NoiselessLimitReproducesData) {
    const Eigen::Vector3d theta(0.4, -0.3, 5.0);
    PanelData x;
    x.grid = TimeGrid::regular(12);
    x.zone_ids = {"z"};
    x.values.resize(12, 1);
    x.observed = BoolMatrix::Constant(12, 1, true);
    for (Eigen::Index i = 0; i < 12; ++i) x.values(i, 0) = observation_row(x.grid.times()[static_cast<std::size_t>(i)], {}).dot(theta);
    const SingleZoneParams d;
    const FilterResult f = forward_filter_single(x, 1e-12, Vector::Zero(3), d.init_mean, d.init_var, {});
    for (std::size_t i = 0; i < 12; ++i) {
        const double fitted = observation_row(x.grid.times()[i], {}).dot(f.trajectory.m[i]);
        EXPECT_NEAR(fitted, x.values(static_cast<Eigen::Index>(i), 0), 1e-6);
    }
    EXPECT_TRUE(f.trajectory.m.back().isApprox(theta, 1e-6));
}

TEST(ForwardFilterProperties, CovariancesStaySymmetricPsd) {
    Rng rng(6);
    for (int rep = 0; rep < 30; ++rep) {
        const PanelData x = test::random_panel(20, 4, rng, 0.3);
        const JointStaticParams p = test::random_params(4, rng);
        const CovMatrix K3 = kernel_matrix(test::random_geometry(4, rng), p.eta3);
        const FilterResult f = forward_filter_joint(x, p, K3);
        for (std::size_t i = 0; i < f.trajectory.steps(); ++i) {
            const Matrix& C = f.trajectory.C[i];
            const Matrix& R = f.trajectory.R[i];
            EXPECT_TRUE((C - C.transpose()).isZero(0.0));
            EXPECT_GE(min_eigenvalue(C), -1e-8);
            EXPECT_GE(min_eigenvalue(R), -1e-8);
            EXPECT_TRUE(std::isfinite(f.trajectory.loglik[i]));
        }
    }
}

TEST(ForwardFilterProperties, MaskedFilterEqualsExplicitIncidenceModel) {
    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        const PanelData x = test::random_panel(8, 3, rng, 0.4);
        const JointStaticParams p = test::random_params(3, rng);
        const CovMatrix K3 = kernel_matrix(test::random_geometry(3, rng), p.eta3);
        const Matrix base = joint_system_base(p.sys_var, K3);
        const FilterResult f = forward_filter_joint(x, p, K3);
        const FilterResult ref = incidence_reference(x, p.obs_var, base, p.init_mean, p.init_var);
        EXPECT_NEAR(f.log_likelihood, ref.log_likelihood, 1e-10 * (1.0 + std::abs(ref.log_likelihood)));
        for (std::size_t i = 0; i < 8; ++i) {
            EXPECT_LT((f.trajectory.m[i] - ref.trajectory.m[i]).cwiseAbs().maxCoeff(), 1e-10);
            EXPECT_LT((f.trajectory.C[i] - ref.trajectory.C[i]).cwiseAbs().maxCoeff(), 1e-10);
            EXPECT_NEAR(f.trajectory.loglik[i], ref.trajectory.loglik[i], 1e-10);
        }
    }
}

TEST(ForwardFilterProperties, LikelihoodInvariantUnderZonePermutation) {
    Rng rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t nz = 4;
        const PanelData x = test::random_panel(10, nz, rng, 0.2);
        JointStaticParams p = test::random_params(nz, rng);
        p.init_var = Matrix::Identity(4, 4) * 2.0;
        const ZoneGeometry g = test::random_geometry(nz, rng);
        std::vector<std::size_t> perm(nz);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        JointStaticParams q = p;
        for (std::size_t j = 0; j < nz; ++j) {
            const auto a = static_cast<Eigen::Index>(j), b = static_cast<Eigen::Index>(perm[j]);
            q.obs_var(a) = p.obs_var(b);
            q.sys_var(a) = p.sys_var(b);
            q.init_mean(a) = p.init_mean(b);
        }
        const double l1 = forward_filter_joint(x, p, kernel_matrix(g, p.eta3)).log_likelihood;
        const ZoneGeometry gp = g.permuted(perm);
        const double l2 = forward_filter_joint(x.permuted(perm), q, kernel_matrix(gp, q.eta3)).log_likelihood;
        EXPECT_NEAR(l1, l2, 1e-10 * std::abs(l1));
    }
}

TEST(ForwardFilterProperties, DoublingVLowersLikelihoodOnAverage) {
    Rng rng(9);
    const std::size_t nz = 3;
    const ZoneGeometry g = ZoneGeometry::line(nz, 1.0);
    JointStaticParams p = test::random_params(nz, rng);
    p.theta1.setZero();
    p.theta2.setZero();
    const CovMatrix K3 = kernel_matrix(g, p.eta3);
    JointStaticParams doubled = p;
    doubled.obs_var *= 2.0;
    double diff = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        SimulationRecipe r{p, g, TimeGrid::regular(40), 0.0, std::nullopt, static_cast<std::uint64_t>(rep + 1), {}};
        const PanelData x = simulate_joint(r).panel;
        diff += forward_filter_joint(x, p, K3).log_likelihood - forward_filter_joint(x, doubled, K3).log_likelihood;
    }
    EXPECT_GT(diff / 100.0, 0.0);
}

TEST(ForwardFilterProperties, SingleZoneFilterWithKnownHarmonicEqualsJointFilter) {
    Rng rng(10);
    for (int rep = 0; rep < 20; ++rep) {
        const PanelData x = test::random_panel(15, 1, rng, 0.2);
        JointStaticParams p = test::random_params(1, rng);
        const CovMatrix K3 = kernel_matrix(ZoneGeometry::line(1, 1.0), p.eta3);
        const double joint = forward_filter_joint(detrend(x, p.theta1, p.theta2, {}), p, K3).log_likelihood;

        // θ1, θ2 pinned at the static values; level noise W + σ3².
        const double s3 = p.eta3.sigma * p.eta3.sigma;
        Vector m0(3), W(3);
        m0 << p.theta1(0), p.theta2(0), p.init_mean(0);
        W << 0.0, 0.0, p.sys_var(0) + s3;
        Matrix C0 = Matrix::Zero(3, 3);
        C0(2, 2) = p.init_var(0, 0);
        const double single = forward_filter_single(x, p.obs_var(0), W, m0, C0, {}).log_likelihood;
        EXPECT_NEAR(single, joint, 1e-10 * std::abs(joint));

        const double levels = forward_filter_levels(detrend(x, p.theta1, p.theta2, {}), p.obs_var,
                                                    Matrix::Constant(1, 1, p.sys_var(0) + s3), p.init_mean, p.init_var)
                                  .log_likelihood;
        EXPECT_NEAR(levels, joint, 1e-10 * std::abs(joint));
    }
}
