#include <chrono>
#include <cmath>

#include <gtest/gtest.h>

#include "palmexp/exact.hpp"

using namespace palmexp;

namespace {
double two_dim_ps(double alpha, double sigma = 1.0) {
    const double lambda = std::exp(poisson_log_intensity(WhiteGaussian(sigma), 2, alpha));
    return 1.0 / (1.0 + 2.0 * kPi * lambda * sigma * sigma);
}
} // namespace

TEST(PoissonQuadrature, TwoDimensionalOracle) {
    for (double alpha : {1.1, 1.5, 2.0, 3.0}) {
        const auto p = poisson_mle_log_pe(WhiteGaussian(1.0), 2, alpha);
        EXPECT_NEAR(p.log_pe, std::log(1.0 - two_dim_ps(alpha)), 1e-10) << alpha;
        EXPECT_NEAR(std::exp(p.log_ps), two_dim_ps(alpha), 1e-10) << alpha;
        EXPECT_NEAR(std::exp(p.log_pe) + std::exp(p.log_ps), 1.0, 1e-12);
    }
}

TEST(PoissonQuadrature, FrozenTwoDimensionalValues) {
    const double expected[] = {0.2331480033089999, 0.1405257382696067, 0.0842238084008974, 0.0392703005500506};
    const double alphas[] = {1.1, 1.5, 2.0, 3.0};
    for (int i = 0; i < 4; ++i)
        EXPECT_NEAR(std::exp(poisson_mle_log_pe(WhiteGaussian(1.0), 2, alphas[i]).log_pe), expected[i], 1e-12);
}

TEST(PoissonQuadrature, OtherSigma) {
    const auto p = poisson_mle_log_pe(WhiteGaussian(2.5), 2, 1.5);
    EXPECT_NEAR(std::exp(p.log_ps), two_dim_ps(1.5, 2.5), 1e-10);
}

TEST(PoissonQuadrature, VanishesForLargeAlpha) {
    EXPECT_LT(poisson_mle_log_pe(WhiteGaussian(1.0), 20, 1e4).log_pe, -100.0);
    EXPECT_EQ(poisson_log_probability(WhiteGaussian(1.0), 5, kNegInf).log_pe, kNegInf);
}

TEST(PoissonQuadrature, HighDimensionExponents) {
    const auto t0 = std::chrono::steady_clock::now();
    const double e12 = -poisson_mle_log_pe(WhiteGaussian(1.0), 400, 1.2).log_pe / 400;
    const double e2 = -poisson_mle_log_pe(WhiteGaussian(1.0), 400, 2.0).log_pe / 400;
    const double e3 = -poisson_mle_log_pe(WhiteGaussian(1.0), 400, 3.0).log_pe / 400;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_NEAR(e12, 0.047539, 2e-5);
    EXPECT_NEAR(e2, 0.509788, 2e-5);
    EXPECT_NEAR(e3, 0.915253, 2e-5);
    EXPECT_LT(secs, 15.0);
}

TEST(PoissonQuadrature, FlatColoredMatchesWhite) {
    const auto w = poisson_mle_log_pe(WhiteGaussian(1.0), 10, 1.5);
    const auto c = poisson_mle_log_pe(ColoredGaussian::flat(1.0, 16), 10, 1.5);
    EXPECT_NEAR(c.log_pe, w.log_pe, 1e-10);
}

TEST(PoissonQuadrature, UnsupportedModel) {
    EXPECT_THROW(poisson_mle_log_pe(WhiteSymExp(1.0), 4, 1.5), UnsupportedOperation);
}

TEST(PoissonQuadrature, CapacityDichotomy) {
    EXPECT_GT(std::exp(poisson_mle_log_pe(WhiteGaussian(1.0), 200, 0.8).log_pe), 0.99);
    EXPECT_LT(std::exp(poisson_mle_log_pe(WhiteGaussian(1.0), 200, 2.0).log_pe), 0.01);
}

TEST(MaternBound, GaussianExponentAtThree) {
    const double e = -matern_mle_log_pe_bound(WhiteGaussian(1.0), 400, 3.0, 0.01) / 400;
    EXPECT_NEAR(e, 1.125, 0.05);
    EXPECT_NEAR(e, 1.132709, 1e-4);
}

TEST(MaternBound, MonotoneInIntensity) {
    double prev = kNegInf;
    for (double alpha : {4.0, 3.5, 3.0, 2.5}) {
        const double b = matern_mle_log_pe_bound(WhiteGaussian(1.0), 50, alpha, 0.1);
        EXPECT_GT(b, prev);
        prev = b;
    }
}

TEST(MaternBound, SymExpDecays) {
    const double b50 = matern_mle_log_pe_bound(WhiteSymExp(1.0), 50, 3.0, 0.01);
    const double b200 = matern_mle_log_pe_bound(WhiteSymExp(1.0), 200, 3.0, 0.01);
    EXPECT_LT(b200, b50);
    EXPECT_GT(-b200 / 200, 0.3);
}

TEST(MaternBound, Errors) {
    EXPECT_THROW(matern_mle_log_pe_bound(WhiteGaussian(1.0), 10, 1.05, 0.1), DomainError);
    EXPECT_THROW(matern_mle_log_pe_bound(WhiteUniform(1.0), 10, 3.0, 0.1), UnsupportedOperation);
}

TEST(TypicalityBound, UniformClosedForm) {
    const double alpha = 2.0;
    const double R = -std::log(2 * std::sqrt(3.0)) - std::log(alpha);
    const double b = typicality_log_pe_bound(WhiteUniform(1.0), 10, R, 0.3);
    EXPECT_NEAR(std::exp(b), -std::expm1(-std::pow(alpha, -10.0)), 1e-15);
    EXPECT_NEAR(std::exp(b), 9.76085818024338e-4, 1e-15);
}

TEST(TypicalityBound, DecreasingBelowCapacity) {
    for (const NoiseModel& m : {NoiseModel(WhiteGaussian(1.0)), NoiseModel(WhiteSymExp(1.0)), NoiseModel(WhiteUniform(1.0))}) {
        double first = 0.0, prev = kInf;
        for (int n : {50, 100, 200, 400}) {
            const double R = -entropy_rate(m) - std::log(2.0);
            const double b = std::exp(typicality_log_pe_bound(m, n, R, 0.2));
            if (n == 50) first = b;
            EXPECT_LT(b, prev) << model_name(m) << " n=" << n;
            prev = b;
        }
        EXPECT_LT(prev, first / 100) << model_name(m);
    }
}

TEST(TypicalityBound, NoDecayAboveCapacity) {
    const NoiseModel m = WhiteGaussian(1.0);
    const double R = -entropy_rate(m) + 0.1;
    EXPECT_GT(std::exp(typicality_log_pe_bound(m, 400, R, 0.05)), 0.99);
}

TEST(Mismatched, MatchedDesignAgreesWithQuadrature) {
    RunOptions opt;
    opt.trials = 100000;
    opt.seed = 17;
    const auto e = mismatched_pe_bound(WhiteGaussian(1.0), WhiteGaussian(1.0), 8, 1.5, opt);
    const double q = std::exp(poisson_mle_log_pe(WhiteGaussian(1.0), 8, 1.5).log_pe);
    EXPECT_LT(std::abs(e.mean - q), 3.0 * e.std_error);
}

TEST(Mismatched, QuieterActualNoiseLowersBound) {
    RunOptions opt;
    opt.trials = 20000;
    const auto same = mismatched_pe_bound(WhiteGaussian(1.0), WhiteGaussian(1.0), 8, 1.5, opt);
    const auto quiet = mismatched_pe_bound(WhiteGaussian(1.0), WhiteGaussian(0.7), 8, 1.5, opt);
    EXPECT_LT(quiet.mean, same.mean);
}

TEST(Mismatched, Errors) {
    RunOptions opt;
    opt.trials = 0;
    EXPECT_THROW(mismatched_pe_bound(WhiteGaussian(1.0), WhiteGaussian(1.0), 8, 1.5, opt), DomainError);
    opt.trials = 10;
    EXPECT_THROW(mismatched_pe_bound(MarkovGaussianAR1(0.2, 1.0), WhiteGaussian(1.0), 8, 1.5, opt), UnsupportedOperation);
}

TEST(Grid, SuccessProbability) {
    EXPECT_NEAR(grid_log_ps(1, 0.0, 1.0), std::log(0.382924922548026), 1e-13);
    EXPECT_NEAR(grid_log_ps(7, 0.3, 0.8) / 7, grid_log_ps(1, 0.3, 0.8), 1e-15);
    double prev = 0.0;
    for (int n = 1; n <= 20; ++n) {
        const double v = grid_log_ps(n, -0.2, 1.3);
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(Derivative, TwoDimensionalClosedForm) {
    for (double lambda : {0.0, 0.05, 0.3}) {
        const double expected = -2 * kPi / std::pow(1 + 2 * kPi * lambda, 2);
        EXPECT_NEAR(dps_dlambda(2, lambda, 1.0) / expected, 1.0, 1e-10) << lambda;
    }
    EXPECT_LT(dps_dlambda(6, 0.01, 1.0), 0.0);
}

TEST(Derivative, FiniteDifference) {
    for (int n : {2, 5, 12}) {
        const NoiseModel m = WhiteGaussian(1.0);
        const double lambda = std::exp(poisson_log_intensity(m, n, 1.4));
        const double h = lambda * 1e-3;
        auto ps = [&](double l) { return std::exp(poisson_log_probability(m, n, std::log(l)).log_ps); };
        const double d1 = (ps(lambda + h) - ps(lambda - h)) / (2 * h);
        const double d2 = (ps(lambda + h / 2) - ps(lambda - h / 2)) / h;
        const double richardson = (4 * d2 - d1) / 3;
        EXPECT_NEAR(richardson / dps_dlambda(n, lambda, 1.0), 1.0, 1e-6) << n;
    }
}

TEST(Coverage, Limits) {
    EXPECT_GT(coverage_prob_typ_in_voronoi(400, 3.0, 0.1, 1.0), 0.999);
    EXPECT_LT(coverage_prob_typ_in_voronoi(400, 1.5, 0.1, 1.0), 1e-6);
    EXPECT_EQ(coverage_prob_typ_in_voronoi(10, 1e200, 0.1, 1.0), 1.0);
}
