#include "sdlm/kernel.hpp"

#include "test_helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sdlm;

TEST(KernelMatrix, ZeroDistanceGivesMarginalVariance) {
    EXPECT_DOUBLE_EQ(kernel_value(0.0, {1.7, 0.4}), 1.7 * 1.7);
}

TEST(KernelMatrix, ReferenceSigma3Phi3AtOneKm) {
    // 1.352² · exp(−1.103)
    const double expected = 1.352 * 1.352 * std::exp(-1.103);
    EXPECT_NEAR(expected, 0.6066, 5e-5);
    Matrix d(2, 2);
    d << 0, 1, 1, 0;
    const CovMatrix k = kernel_matrix(d, {1.352, 1.103});
    EXPECT_NEAR(k.entries(0, 1), expected, 1e-15);
    EXPECT_EQ(k.jitter, 0.0);
    EXPECT_DOUBLE_EQ(k.entries(0, 0), 1.352 * 1.352);
}

TEST(KernelMatrix, LargeInverseLengthScaleApproachesScaledIdentity) {
    const ZoneGeometry g = ZoneGeometry::line(4, 1.0);
    const CovMatrix k = kernel_matrix(g, {2.0, 200.0});
    EXPECT_TRUE(k.entries.isApprox(4.0 * Matrix::Identity(4, 4), 1e-12));
}

TEST(KernelMatrix, SquaredExponentialFormUsesSquaredDistance) {
    EXPECT_NEAR(kernel_value(2.0, {1.0, 0.5}, KernelForm::squared_exponential), std::exp(-2.0), 1e-15);
    EXPECT_NEAR(kernel_value(2.0, {1.0, 0.5}, KernelForm::exponential), std::exp(-1.0), 1e-15);
}

TEST(KernelMatrix, DuplicatedZonesNeedJitter) {
    Matrix d = Matrix::Zero(3, 3);  // three co-located zones: rank one
    const CovMatrix k = kernel_matrix(d, {1.0, 1.0});
    EXPECT_GT(k.jitter, 0.0);
    EXPECT_LE(k.jitter, 1e-3);
    EXPECT_DOUBLE_EQ(k.entries(0, 0), 1.0 + k.jitter);
    EXPECT_EQ(k.factor.info(), Eigen::Success);
}

TEST(KernelMatrix, ExactlySymmetricAndMonotoneInDistance) {
    Rng rng(21);
    for (int rep = 0; rep < 50; ++rep) {
        const ZoneGeometry g = test::random_geometry(5, rng);
        const KernelParams p{test::uniform(rng, 0.1, 3.0), test::uniform(rng, 0.01, 3.0)};
        const CovMatrix k = kernel_matrix(g, p);
        EXPECT_TRUE((k.entries - k.entries.transpose()).isZero(0.0));
        const Matrix& d = g.distances();
        for (Eigen::Index a = 0; a < 5; ++a)
            for (Eigen::Index b = 0; b < 5; ++b)
                for (Eigen::Index c = 0; c < 5; ++c)
                    for (Eigen::Index e = 0; e < 5; ++e)
                        if (a != b && c != e && d(a, b) <= d(c, e)) EXPECT_GE(k.entries(a, b), k.entries(c, e));
    }
}

TEST(GpLogDensity, StandardNormalAtMode) {
    CovMatrix k;
    k.entries = Matrix::Identity(1, 1);
    k.factor.compute(k.entries);
    EXPECT_NEAR(gp_log_density(Vector::Zero(1), Vector::Zero(1), k), -0.5 * std::log(2 * M_PI), 1e-15);
}

TEST(GpLogDensity, DiagonalCovarianceFactorizes) {
    const CovMatrix k = kernel_matrix(ZoneGeometry::line(3, 1.0), {1.5, 1e4});
    Vector x(3), m(3);
    x << 0.3, -1.2, 2.0;
    m << 0.1, 0.0, 1.0;
    double sum = 0.0;
    for (int j = 0; j < 3; ++j) sum += -0.5 * (std::log(2 * M_PI * 2.25) + (x(j) - m(j)) * (x(j) - m(j)) / 2.25);
    EXPECT_NEAR(gp_log_density(x, m, k), sum, 1e-12);
}

TEST(GpLogDensity, MatchesDenseInverseOracle) {
    Rng rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        const ZoneGeometry g = test::random_geometry(3, rng);
        const CovMatrix k = kernel_matrix(g, {test::uniform(rng, 0.5, 2.0), test::uniform(rng, 0.05, 1.0)});
        const Vector x = standard_normal_vector(3, rng);
        const Vector m = standard_normal_vector(3, rng);
        const Vector d = x - m;
        const double oracle = -0.5 * (3 * std::log(2 * M_PI) + std::log(k.entries.determinant()) +
                                      d.dot(k.entries.inverse() * d));
        EXPECT_NEAR(gp_log_density(x, m, k), oracle, 1e-10 * std::abs(oracle));
    }
}

TEST(GpLogDensity, MaximizedAtMean) {
    Rng rng(9);
    const CovMatrix k = kernel_matrix(test::random_geometry(4, rng), {1.0, 0.3});
    const Vector m = standard_normal_vector(4, rng);
    const double at_mean = gp_log_density(m, m, k);
    for (int rep = 0; rep < 100; ++rep) EXPECT_LT(gp_log_density(m + 0.1 * standard_normal_vector(4, rng), m, k), at_mean);
}

TEST(GpLogDensity, IntegratesToOneInOneAndTwoDimensions) {
    // midpoint rule over ±8 standard deviations
    CovMatrix k1;
    k1.entries = Matrix::Constant(1, 1, 0.7);
    k1.factor.compute(k1.entries);
    const double s1 = std::sqrt(0.7);
    const int n1 = 4000;
    const double h1 = 16 * s1 / n1;
    double total1 = 0.0;
    for (int i = 0; i < n1; ++i)
        total1 += std::exp(gp_log_density(Vector::Constant(1, -8 * s1 + (i + 0.5) * h1), Vector::Zero(1), k1)) * h1;
    EXPECT_NEAR(total1, 1.0, 1e-8);

    Matrix d(2, 2);
    d << 0, 0.8, 0.8, 0;
    const CovMatrix k2 = kernel_matrix(d, {1.0, 0.5});
    const int n2 = 600;
    const double h2 = 16.0 / n2;
    double total2 = 0.0;
    Vector x(2);
    for (int i = 0; i < n2; ++i)
        for (int j = 0; j < n2; ++j) {
            x << -8 + (i + 0.5) * h2, -8 + (j + 0.5) * h2;
            total2 += std::exp(gp_log_density(x, Vector::Zero(2), k2)) * h2 * h2;
        }
    EXPECT_NEAR(total2, 1.0, 1e-6);
}
