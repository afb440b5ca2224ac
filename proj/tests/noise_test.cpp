#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "palmexp/noise.hpp"

using namespace palmexp;

namespace {
const double kH_wgn = 0.5 * std::log(2.0 * kPi * std::exp(1.0));
}

TEST(NoiseSample, UniformWithinSupport) {
    const NoiseModel m = WhiteUniform(1.0);
    Stream s(7, 0);
    for (int rep = 0; rep < 1000; ++rep)
        for (double v : sample(m, 5, s)) EXPECT_LE(std::abs(v), std::sqrt(3.0));
}

TEST(NoiseSample, WhiteVariances) {
    for (const NoiseModel& m : {NoiseModel(WhiteGaussian(1.7)), NoiseModel(WhiteSymExp(1.7)), NoiseModel(WhiteUniform(1.7))}) {
        Stream s(11, 3);
        double sum = 0.0, sum2 = 0.0;
        const int count = 1000000;
        for (int i = 0; i < count / 4; ++i)
            for (double v : sample(m, 4, s)) {
                sum += v;
                sum2 += v * v;
            }
        const double var = sum2 / count - (sum / count) * (sum / count);
        EXPECT_NEAR(var / (1.7 * 1.7), 1.0, 0.01) << model_name(m);
        EXPECT_NEAR(sum / count, 0.0, 0.01);
    }
}

TEST(NoiseSample, FlatColoredHasNoLagOneCorrelation) {
    const NoiseModel m = ColoredGaussian::flat(1.0, 8);
    EXPECT_NEAR(std::get<ColoredGaussian>(m).lag(1), 0.0, 1e-12);
    Stream s(5, 1);
    const int count = 200000;
    double acc = 0.0, acc2 = 0.0;
    for (int i = 0; i < count; ++i) {
        const auto x = sample(m, 2, s);
        acc += x[0] * x[1];
        acc2 += x[0] * x[0] * x[1] * x[1];
    }
    const double mean = acc / count;
    const double se = std::sqrt((acc2 / count - mean * mean) / count);
    EXPECT_LT(std::abs(mean), 3.0 * se);
}

TEST(NoiseSample, MarkovAndColoredLagsAgree) {
    const double a = 0.6, se = 0.8;
    const auto cg = ColoredGaussian::ar1(a, se, 16);
    for (int k = 0; k < 16; ++k)
        EXPECT_NEAR(cg.lag(k), se * se * std::pow(a, k) / (1 - a * a), 1e-12) << k;
    const NoiseModel mk = MarkovGaussianAR1(a, se);
    Stream s(3, 9);
    const int count = 200000;
    double c1 = 0.0;
    for (int i = 0; i < count; ++i) {
        const auto x = sample(mk, 3, s);
        c1 += x[1] * x[2];
    }
    EXPECT_NEAR(c1 / count, cg.lag(1), 0.02);
}

TEST(NoiseModelErrors, InvalidParameters) {
    EXPECT_THROW(WhiteGaussian(0.0), DomainError);
    EXPECT_THROW(WhiteSymExp(-1.0), DomainError);
    EXPECT_THROW(MarkovGaussianAR1(1.0, 1.0), DomainError);
    EXPECT_THROW(ColoredGaussian([](double) { return 0.0; }, 4), ModelError);
    EXPECT_THROW(ColoredGaussian::flat(1.0, 4).log_det(5), ModelError);
}

TEST(LogDensity, Examples) {
    const std::vector<double> zero2(2, 0.0);
    EXPECT_NEAR(log_density(WhiteGaussian(1.0), zero2), -std::log(2 * kPi), 1e-14);
    const std::vector<double> zero7(7, 0.0);
    EXPECT_NEAR(log_density(WhiteUniform(1.0), zero7), -7 * std::log(2 * std::sqrt(3.0)), 1e-13);
    const std::vector<double> one{1.0};
    EXPECT_NEAR(log_density(WhiteSymExp(1.0), one), std::log(kSqrt2 / 2) - kSqrt2, 1e-14);
    const std::vector<double> outside{0.0, 2.0};
    EXPECT_EQ(log_density(WhiteUniform(1.0), outside), kNegInf);
}

TEST(LogDensity, ColoredFlatMatchesWhite) {
    const NoiseModel c = ColoredGaussian::flat(1.3, 12);
    const NoiseModel w = WhiteGaussian(1.3);
    Stream s(1, 1);
    for (int rep = 0; rep < 50; ++rep) {
        const auto x = sample(w, 12, s);
        EXPECT_NEAR(log_density(c, x), log_density(w, x), 1e-10);
    }
}

TEST(LogDensity, MarkovMatchesColoredAr1) {
    const NoiseModel c = ColoredGaussian::ar1(0.5, 1.0, 20);
    const NoiseModel m = MarkovGaussianAR1(0.5, 1.0);
    Stream s(2, 2);
    for (int rep = 0; rep < 50; ++rep) {
        const auto x = sample(m, 20, s);
        EXPECT_NEAR(log_density(c, x), log_density(m, x), 1e-9);
    }
}

TEST(Stun, AtZeroDisplacement) {
    const std::vector<double> x{0.3, -1.2, 2.0};
    for (const NoiseModel& m : {NoiseModel(WhiteGaussian(1.0)), NoiseModel(WhiteSymExp(2.0)),
                                NoiseModel(WhiteUniform(1.0)), NoiseModel(MarkovGaussianAR1(0.3, 1.0))}) {
        const std::vector<double> z(3, 0.0);
        EXPECT_DOUBLE_EQ(stun(m, x, x), -log_density(m, z) / 3.0);
    }
}

TEST(Stun, GaussianIsScaledSquaredDistance) {
    const double sigma = 1.5;
    const std::vector<double> s{1.0, 2.0}, t{-0.5, 0.25};
    const double d2 = 1.5 * 1.5 + 1.75 * 1.75;
    EXPECT_NEAR(stun(WhiteGaussian(sigma), s, t), 0.5 * std::log(2 * kPi * sigma * sigma) + d2 / (2 * 2 * sigma * sigma),
                1e-14);
}

TEST(Stun, UniformSupport) {
    const std::vector<double> s{0.0, 0.0}, in{1.7, -1.7}, out{1.8, 0.0};
    EXPECT_TRUE(std::isfinite(stun(WhiteUniform(1.0), s, in)));
    EXPECT_EQ(stun(WhiteUniform(1.0), s, out), kInf);
}

TEST(EntropyRate, ClosedForms) {
    EXPECT_NEAR(entropy_rate(WhiteSymExp(1.0)), 1.346573590279973, 1e-14);
    EXPECT_NEAR(entropy_rate(WhiteGaussian(1.0)), kH_wgn, 1e-14);
    EXPECT_NEAR(entropy_rate(ColoredGaussian::flat(1.7, 4)), entropy_rate(WhiteGaussian(1.7)), 1e-8);
    EXPECT_NEAR(entropy_rate(ColoredGaussian::ar1(0.5, 1.2, 4)), entropy_rate(MarkovGaussianAR1(0.5, 1.2)), 1e-6);
}

TEST(LevelVolume, Examples) {
    EXPECT_EQ(stun_level_log_volume(WhiteGaussian(1.0), 3, 0.5 * kLn2Pi), kNegInf);
    EXPECT_NEAR(stun_level_log_volume(WhiteGaussian(1.0), 2, 0.5 * kLn2Pi + 0.5), std::log(2 * kPi), 1e-13);
    const double hu = std::log(2 * std::sqrt(3.0));
    EXPECT_NEAR(stun_level_log_volume(WhiteUniform(1.0), 5, hu + 0.1), 5 * hu, 1e-13);
    EXPECT_EQ(stun_level_log_volume(WhiteUniform(1.0), 5, hu - 0.1), kNegInf);
    EXPECT_THROW(stun_level_log_volume(MarkovGaussianAR1(0.2, 1.0), 3, 2.0), UnsupportedOperation);
}

TEST(LevelVolume, ColoredFlatMatchesWhite) {
    for (double u : {1.0, 1.5, 3.0})
        EXPECT_NEAR(stun_level_log_volume(ColoredGaussian::flat(1.0, 10), 10, u),
                    stun_level_log_volume(WhiteGaussian(1.0), 10, u), 1e-10);
}

TEST(TypicalityVolume, Examples) {
    const double hu = std::log(2 * std::sqrt(3.0));
    EXPECT_NEAR(typicality_log_volume(WhiteUniform(1.0), 6, 0.1), 6 * hu, 1e-13);
    EXPECT_NEAR(typicality_log_volume(WhiteUniform(1.0), 6, 0.7), 6 * hu, 1e-13);
    EXPECT_NEAR(typicality_log_volume(WhiteGaussian(1.0), 2, 0.25), std::log(2 * kPi), 1e-13);
    for (const NoiseModel& m : {NoiseModel(WhiteGaussian(1.0)), NoiseModel(WhiteSymExp(0.5)), NoiseModel(WhiteUniform(2.0))})
        for (int n : {1, 10, 100})
            EXPECT_LE(typicality_log_volume(m, n, 0.2), n * (entropy_rate(m) + 0.2));
    EXPECT_THROW(typicality_log_volume(MarkovGaussianAR1(0.2, 1.0), 3, 0.1), UnsupportedOperation);
}

TEST(EntropySpectrum, UniformIsConstant) {
    Stream s(1, 4);
    for (int i = 0; i < 100; ++i)
        EXPECT_NEAR(entropy_spectrum_sample(WhiteUniform(1.0), 9, s).u, std::log(2 * std::sqrt(3.0)), 1e-14);
}

TEST(EntropySpectrum, GaussianMean) {
    Stream s(99, 0);
    const int count = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < count; ++i) {
        const double u = entropy_spectrum_sample(WhiteGaussian(1.0), 50, s).u;
        sum += u;
        sum2 += u * u;
    }
    const double mean = sum / count;
    const double se = std::sqrt((sum2 / count - mean * mean) / count);
    EXPECT_LT(std::abs(mean - kH_wgn), 3 * se);
}

TEST(EntropySpectrum, PeakValue) {
    const std::vector<double> zero{0.0};
    EXPECT_NEAR(-log_density(WhiteGaussian(1.0), zero), 0.5 * kLn2Pi, 1e-15);
}

TEST(RateFunction, Examples) {
    EXPECT_NEAR(rate_function(WhiteGaussian(1.0), kH_wgn), 0.0, 1e-15);
    EXPECT_NEAR(rate_function(WhiteGaussian(1.0), 0.5 * kLn2Pi + 1.0), 0.153426409720027, 1e-14);
    EXPECT_EQ(rate_function(WhiteUniform(1.0), 1.0), kInf);
    EXPECT_EQ(rate_function(WhiteUniform(1.0), std::log(2 * std::sqrt(3.0))), 0.0);
    EXPECT_EQ(rate_function(WhiteGaussian(1.0), 0.5 * kLn2Pi), kInf);
    EXPECT_EQ(rate_function(WhiteSymExp(1.0), 0.0), kInf);
    EXPECT_NEAR(rate_function(WhiteSymExp(1.0), entropy_rate(WhiteSymExp(1.0))), 0.0, 1e-15);
    EXPECT_THROW(rate_function(MarkovGaussianAR1(0.1, 1.0), 2.0), UnsupportedOperation);
}
