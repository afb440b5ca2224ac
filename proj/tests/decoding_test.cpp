#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "palmexp/decoding.hpp"
#include "palmexp/pointprocess.hpp"

using namespace palmexp;

namespace {
PointSet points(int n, const std::vector<std::vector<double>>& pts) {
    PointSet ps(n);
    for (const auto& p : pts) ps.push_back(p);
    return ps;
}
} // namespace

TEST(Mle, GaussianBallTest) {
    const auto pts = points(2, {{3.0, 0.0}});
    const std::vector<double> d1{1.0, 0.0}, d2{2.0, 0.0};
    EXPECT_EQ(mle_success(WhiteGaussian(1.0), pts, d1).status, DecodeStatus::Success);
    const auto f = mle_success(WhiteGaussian(1.0), pts, d2);
    EXPECT_EQ(f.status, DecodeStatus::Failure);
    EXPECT_EQ(f.cause, 0u);
}

TEST(Mle, EmptyInterferersSucceed) {
    const PointSet none(3);
    const std::vector<double> d{10.0, -3.0, 2.0};
    for (const NoiseModel& m : {NoiseModel(WhiteGaussian(1.0)), NoiseModel(WhiteSymExp(1.0)), NoiseModel(WhiteUniform(1.0)),
                                NoiseModel(ColoredGaussian::ar1(0.3, 1.0, 4)), NoiseModel(MarkovGaussianAR1(0.3, 1.0))})
        EXPECT_TRUE(mle_success(m, none, d).decoded());
}

TEST(Mle, ExactTieIsAmbiguous) {
    const auto pts = points(1, {{2.0}});
    const std::vector<double> d{1.0};
    const auto out = mle_success(WhiteGaussian(1.0), pts, d);
    EXPECT_EQ(out.status, DecodeStatus::Ambiguous);
    EXPECT_FALSE(out.fallback_success);
}

TEST(Mle, UniformTieUsesEuclideanFallback) {
    const double w = std::sqrt(3.0);
    const std::vector<double> d{0.4, 0.1};
    const auto far = points(2, {{0.4 + w * 0.9, 0.1}});
    const auto out = mle_success(WhiteUniform(1.0), far, d);
    EXPECT_EQ(out.status, DecodeStatus::Ambiguous);
    EXPECT_TRUE(out.fallback_success);
    const auto near = points(2, {{0.5, 0.0}});
    const auto out2 = mle_success(WhiteUniform(1.0), near, d);
    EXPECT_EQ(out2.status, DecodeStatus::Ambiguous);
    EXPECT_FALSE(out2.decoded());
    const auto outside = points(2, {{0.4 + 2 * w, 0.1}});
    EXPECT_EQ(mle_success(WhiteUniform(1.0), outside, d).status, DecodeStatus::Success);
}

TEST(Mle, GaussianBallMatchesStunRule) {
    for (int rep = 0; rep < 2000; ++rep) {
        Stream s(1, static_cast<std::uint64_t>(rep));
        const int n = 1 + rep % 8;
        const NoiseModel m = WhiteGaussian(0.5 + (rep % 3));
        const auto pts = sample_poisson_points(WindowSpec(n, 3.0), std::log(3.0 / std::exp(log_ball_volume(n, 3.0))), s);
        const auto d = sample(m, n, s);
        EXPECT_EQ(mle_success(m, pts, d).status, stun_rule(m, pts, d).status);
    }
}

TEST(Mle, IndexDoesNotChangeOutcome) {
    for (int rep = 0; rep < 300; ++rep) {
        Stream s(2, static_cast<std::uint64_t>(rep));
        const int n = 1 + rep % 5;
        const auto pts = sample_poisson_points(WindowSpec(n, 5.0), std::log(40.0 / std::exp(log_ball_volume(n, 5.0))), s);
        for (const NoiseModel& m : {NoiseModel(WhiteGaussian(1.0)), NoiseModel(WhiteSymExp(1.0)), NoiseModel(WhiteUniform(1.0)),
                                    NoiseModel(ColoredGaussian::ar1(0.5, 1.0, 8))}) {
            const auto d = sample(m, n, s);
            const GridIndex index(pts, 1.0);
            EXPECT_EQ(mle_success(m, pts, d).status, mle_success(m, pts, d, &index).status) << model_name(m);
        }
    }
}

TEST(Mle, MarkovMatchesColoredAr1) {
    const NoiseModel mk = MarkovGaussianAR1(0.6, 1.0);
    const NoiseModel cg = ColoredGaussian::ar1(0.6, 1.0, 6);
    for (int rep = 0; rep < 500; ++rep) {
        Stream s(3, static_cast<std::uint64_t>(rep));
        const auto pts = sample_poisson_points(WindowSpec(6, 6.0), std::log(20.0 / std::exp(log_ball_volume(6, 6.0))), s);
        const auto d = sample(mk, 6, s);
        EXPECT_EQ(mle_success(mk, pts, d).decoded(), mle_success(cg, pts, d).decoded());
    }
}

TEST(Typicality, AtypicalNoiseFails) {
    const PointSet none(4);
    const std::vector<double> d(4, 0.0);
    EXPECT_EQ(typicality_success(WhiteGaussian(1.0), 0.2, none, d).status, DecodeStatus::Failure);
}

TEST(Typicality, SphereNoiseWithoutNearbyInterferers) {
    const std::vector<double> d{1.0, 1.0, 1.0, 1.0};
    const auto far = points(4, {{20.0, 0.0, 0.0, 0.0}});
    EXPECT_EQ(typicality_success(WhiteGaussian(1.0), 0.1, far, d).status, DecodeStatus::Success);
}

TEST(Typicality, UniformCubeMembership) {
    const std::vector<double> d{0.5, -0.5};
    const auto pts = points(2, {{0.5 + 1.7, -0.5 - 1.7}});
    EXPECT_EQ(typicality_success(WhiteUniform(1.0), 0.1, pts, d).status, DecodeStatus::Failure);
    EXPECT_THROW(typicality_success(MarkovGaussianAR1(0.1, 1.0), 0.1, pts, d), UnsupportedOperation);
}

TEST(Mismatched, DesignEqualsActual) {
    for (int rep = 0; rep < 300; ++rep) {
        Stream s(4, static_cast<std::uint64_t>(rep));
        const auto pts = sample_poisson_points(WindowSpec(3, 4.0), std::log(10.0 / std::exp(log_ball_volume(3, 4.0))), s);
        const NoiseModel m = WhiteSymExp(1.0);
        const auto d = sample(m, 3, s);
        EXPECT_EQ(mismatched_success(m, pts, d).status, mle_success(m, pts, d).status);
        const NoiseModel g = WhiteGaussian(2.0);
        const auto ball = mle_success(WhiteGaussian(0.3), pts, d);
        EXPECT_EQ(mismatched_success(g, pts, d).status, ball.status);
    }
    EXPECT_TRUE(mismatched_success(WhiteGaussian(1.0), PointSet(2), std::vector<double>{1.0, 1.0}).decoded());
}
