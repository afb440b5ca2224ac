#include <cmath>

#include <gtest/gtest.h>

#include "palmexp/geometry.hpp"
#include "palmexp/quadrature.hpp"

using namespace palmexp;

TEST(BallVolume, UnitDisk) { EXPECT_NEAR(log_ball_volume(2, 1.0), std::log(kPi), 1e-14); }

TEST(BallVolume, IntervalLength) { EXPECT_NEAR(log_ball_volume(1, 3.0), std::log(6.0), 1e-14); }

TEST(BallVolume, L1Octahedron) {
    EXPECT_NEAR(log_ball_volume(3, 2.0, Norm::L1), std::log(64.0 / 6.0), 1e-14);
    EXPECT_NEAR(log_ball_volume(3, 2.0, Norm::L1), 2.367123614131617, 1e-13);
}

TEST(BallVolume, ZeroRadiusIsNegInf) {
    EXPECT_EQ(log_ball_volume(5, 0.0), kNegInf);
    EXPECT_EQ(log_ball_volume(5, 0.0, Norm::L1), kNegInf);
}

TEST(BallVolume, LargeDimensionStaysFinite) {
    const double v = log_ball_volume(500, 20.0);
    EXPECT_TRUE(std::isfinite(v));
}

TEST(BallVolume, RejectsBadArguments) {
    EXPECT_THROW(log_ball_volume(0, 1.0), DomainError);
    EXPECT_THROW(log_ball_volume(2, -1.0), DomainError);
}

TEST(LogGamma, HalfIsSqrtPi) { EXPECT_NEAR(log_gamma(0.5), 0.5 * kLnPi, 1e-15); }

TEST(EllipsoidVolume, Examples) {
    const double ones[] = {1.0, 1.0};
    const double scaled[] = {2.0, 3.0};
    const double ones3[] = {1.0, 1.0, 1.0};
    EXPECT_NEAR(log_ellipsoid_volume(2, 1.0, ones), std::log(kPi), 1e-14);
    EXPECT_NEAR(log_ellipsoid_volume(2, 1.0, scaled), std::log(6.0 * kPi), 1e-14);
    EXPECT_NEAR(log_ellipsoid_volume(3, 2.0, ones3), std::log(32.0 * kPi / 3.0), 1e-14);
}

TEST(EllipsoidVolume, NonPositiveScaleThrows) {
    const double bad[] = {1.0, 0.0};
    EXPECT_THROW(log_ellipsoid_volume(2, 1.0, bad), DomainError);
    const double short_list[] = {1.0};
    EXPECT_THROW(log_ellipsoid_volume(2, 1.0, short_list), DomainError);
}

TEST(ChiDensity, Rayleigh) { EXPECT_NEAR(chi_density_log(2, 1.0, 1.0), -0.5, 1e-14); }

TEST(ChiDensity, HalfNormal) { EXPECT_NEAR(chi_density_log(1, 1.0, 1.0), -0.725791352644727, 1e-13); }

TEST(ChiDensity, NonPositiveRadius) {
    EXPECT_EQ(chi_density_log(3, 1.0, 0.0), kNegInf);
    EXPECT_EQ(chi_density_log(3, 1.0, -2.0), kNegInf);
}

TEST(ChiDensity, Normalised) {
    for (int n : {1, 2, 3, 10, 50, 400}) {
        for (double sigma : {0.5, 1.0, 3.0}) {
            const double hi = sigma * (4.0 * std::sqrt(n) + 40.0);
            const double li = log_integrate([&](double r) { return chi_density_log(n, sigma, r); }, 0.0, hi);
            EXPECT_NEAR(li, 0.0, 1e-11) << "n=" << n << " sigma=" << sigma;
        }
    }
}

TEST(GammaL1Density, ExponentialCase) {
    EXPECT_NEAR(gamma_l1_density_log(1, 1.0, 1.0), std::log(kSqrt2) - kSqrt2, 1e-14);
    EXPECT_NEAR(gamma_l1_density_log(1, 1.0, 1.0), -1.067639972093122, 1e-13);
}

TEST(GammaL1Density, ModeForTwoDimensions) {
    const double mode = 1.0 / kSqrt2;
    const double at = gamma_l1_density_log(2, 1.0, mode);
    EXPECT_GT(at, gamma_l1_density_log(2, 1.0, mode - 1e-4));
    EXPECT_GT(at, gamma_l1_density_log(2, 1.0, mode + 1e-4));
}

TEST(GammaL1Density, Normalised) {
    for (int n = 1; n <= 50; ++n) {
        const double li =
            log_integrate([&](double r) { return gamma_l1_density_log(n, 1.0, r); }, 0.0, 4.0 * n + 60.0);
        EXPECT_NEAR(li, 0.0, 1e-11) << "n=" << n;
    }
}

TEST(LuneRadius, Branches) {
    EXPECT_EQ(matern_lune_radius(0.9, 2.0), 0.0);
    EXPECT_NEAR(matern_lune_radius(1.2, 2.0), 1.105541596785133, 1e-13);
    EXPECT_EQ(matern_lune_radius(1.5, 2.0), 1.5);
}

TEST(LuneRadius, ContinuousAtBreakpoints) {
    for (double at : {1.5, 2.0, 3.7}) {
        const double b1 = at / 2.0, b2 = at / kSqrt2;
        EXPECT_NEAR(matern_lune_radius(b1 * (1 - 1e-15), at), matern_lune_radius(b1, at), 1e-12);
        EXPECT_NEAR(matern_lune_radius(std::nextafter(b1, 10.0), at), matern_lune_radius(b1, at), 1e-6);
        EXPECT_NEAR(matern_lune_radius(b2 * (1 - 1e-15), at), matern_lune_radius(b2, at), 1e-12);
    }
}

TEST(L1LuneBounds, BelowHalfIsEmpty) {
    for (int n : {1, 7, 100}) {
        const auto b = l1_lune_log_volume_bounds(n, 0.9, 2.0, 1.0);
        EXPECT_EQ(b.lower, kNegInf);
        EXPECT_EQ(b.upper, kNegInf);
    }
}

TEST(L1LuneBounds, Ordering) {
    const auto b = l1_lune_log_volume_bounds(10, 2.0, 2.0, 1.0);
    EXPECT_LE(b.lower, b.upper);
    const auto c = l1_lune_log_volume_bounds(10, 1.3, 2.0, 1.0);
    EXPECT_LE(c.lower, c.upper);
}

TEST(L1LuneBounds, PerDimensionLimits) {
    const double target = std::log(kSqrt2 * 2.0 * std::exp(1.0));
    double prev_gap = kInf;
    for (int n : {10, 100, 1000, 10000}) {
        const auto b = l1_lune_log_volume_bounds(n, 2.0, 2.0, 1.0);
        const double gap = (b.upper - b.lower) / n;
        EXPECT_LT(gap, prev_gap);
        prev_gap = gap;
    }
    const auto b = l1_lune_log_volume_bounds(100000, 2.0, 2.0, 1.0);
    EXPECT_NEAR(b.upper / 100000, target, 1e-4);
    EXPECT_LT((b.upper - b.lower) / 100000, 1e-4);
}
