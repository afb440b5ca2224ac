#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "palmexp/pointprocess.hpp"

using namespace palmexp;

namespace {
double min_pair_distance(const PointSet& p) {
    double best = kInf;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j) best = std::min(best, std::sqrt(squared_distance(p[i], p[j])));
    return best;
}

PointConfiguration from_points(int n, const std::vector<std::vector<double>>& pts) {
    PointSet ps(n);
    for (const auto& p : pts) ps.push_back(p);
    return {WindowSpec(n, 100.0), ps, 0.0, PoissonOrigin{}};
}
} // namespace

TEST(SamplePoisson, ZeroIntensityIsEmpty) {
    Stream s(1, 1);
    EXPECT_EQ(sample_poisson(WindowSpec(3, 5.0), kNegInf, s).size(), 0u);
}

TEST(SamplePoisson, CountMeanAndDispersion) {
    const WindowSpec w(2, 10.0);
    const int reps = 10000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < reps; ++i) {
        Stream s(42, static_cast<std::uint64_t>(i));
        const auto c = static_cast<double>(sample_poisson(w, 0.0, s).size());
        sum += c;
        sum2 += c * c;
    }
    const double mean = sum / reps;
    const double var = sum2 / reps - mean * mean;
    EXPECT_LT(std::abs(mean - 100.0 * kPi), 3.0 * std::sqrt(var / reps));
    EXPECT_NEAR(var / mean, 1.0, 0.05);
}

TEST(SamplePoisson, PointsInsideWindow) {
    Stream s(3, 3);
    const auto c = sample_poisson(WindowSpec(4, 2.5), 1.0, s);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_LE(squared_norm(c.points[i]), 2.5 * 2.5);
}

TEST(SamplePoisson, OverflowIsConfigurationError) {
    Stream s(3, 3);
    EXPECT_THROW(sample_poisson(WindowSpec(2, 1e4), 2.0, s), ConfigurationError);
}

TEST(Matern1, SinglePointRetained) {
    EXPECT_EQ(matern1_thin(from_points(2, {{0.0, 0.0}}), 1.0).size(), 1u);
}

TEST(Matern1, ClosePairBothDropped) {
    const auto out = matern1_thin(from_points(2, {{0.0, 0.0}, {0.5, 0.0}, {5.0, 5.0}}), 1.0);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out.points[0][0], 5.0);
}

TEST(Matern1, HardCoreProperty) {
    for (int rep = 0; rep < 50; ++rep) {
        Stream s(8, static_cast<std::uint64_t>(rep));
        const auto parent = sample_poisson(WindowSpec(3, 4.0), 0.0, s);
        const auto thinned = matern1_thin(parent, 0.7);
        EXPECT_GE(min_pair_distance(thinned.points), 0.7);
    }
}

TEST(Matern1, RequiresPoissonInput) {
    auto c = from_points(1, {{0.0}});
    c.provenance = GridOrigin{0.0, {0.0}};
    EXPECT_THROW(matern1_thin(c, 1.0), DomainError);
}

TEST(MaternStun, AtThresholdNothingDropped) {
    Stream s(4, 4);
    const auto parent = sample_poisson(WindowSpec(2, 3.0), 1.0, s);
    const auto out = matern_stun_thin(parent, WhiteGaussian(1.0), 0.5 * kLn2Pi);
    EXPECT_EQ(out.points, parent.points);
    EXPECT_EQ(wgn_exclusion_radius(5, 1.0, 0.5 * kLn2Pi), 0.0);
}

TEST(MaternStun, GaussianEqualsMatern1) {
    EXPECT_NEAR(wgn_exclusion_radius(4, 1.0, 0.5 * kLn2Pi + 1.0), 2.0 * kSqrt2, 1e-14);
    for (int rep = 0; rep < 20; ++rep) {
        Stream s(5, static_cast<std::uint64_t>(rep));
        const auto parent = sample_poisson(WindowSpec(4, 6.0), -1.0, s);
        const double xi = 0.5 * kLn2Pi + 1.0;
        EXPECT_EQ(matern_stun_thin(parent, WhiteGaussian(1.0), xi).points,
                  matern1_thin(parent, wgn_exclusion_radius(4, 1.0, xi)).points);
    }
}

TEST(MaternStun, SymExpUsesL1Balls) {
    const double xi = std::log(kSqrt2) + 0.5;
    const double rho = symexp_exclusion_l1_radius(2, 1.0, xi);
    EXPECT_NEAR(rho, 2.0 * 0.5 / kSqrt2, 1e-14);
    const auto inside = matern_stun_thin(from_points(2, {{0.0, 0.0}, {0.3 * rho, 0.6 * rho}}), WhiteSymExp(1.0), xi);
    EXPECT_EQ(inside.size(), 0u);
    const auto outside = matern_stun_thin(from_points(2, {{0.0, 0.0}, {0.5 * rho, 0.6 * rho}}), WhiteSymExp(1.0), xi);
    EXPECT_EQ(outside.size(), 2u);
}

TEST(Grid, OneDimensionalExample) {
    const std::vector<double> shift{0.0};
    const auto g = grid_codebook(1, 0.0, shift, WindowSpec(1, 2.5));
    ASSERT_EQ(g.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(g.points[i][0], -2.0 + static_cast<double>(i));
}

TEST(Grid, IntensityMatchesSpacing) {
    const std::vector<double> shift{0.13, -0.41};
    const double R = 0.7, radius = 60.0;
    const auto g = grid_codebook(2, R, shift, WindowSpec(2, radius));
    const double density = static_cast<double>(g.size()) / (kPi * radius * radius);
    EXPECT_NEAR(density / std::exp(2 * R), 1.0, 0.01);
    EXPECT_DOUBLE_EQ(g.log_intensity, 2 * R);
}

TEST(Grid, ShiftByPeriodReproducesSet) {
    const double R = 0.3, h = std::exp(-R);
    const std::vector<double> a{0.1, 0.2, -0.05}, b{0.1 + h, 0.2, -0.05};
    const WindowSpec w(3, 4.0);
    const auto ga = grid_codebook(3, R, a, w), gb = grid_codebook(3, R, b, w);
    ASSERT_EQ(ga.size(), gb.size());
    for (std::size_t i = 0; i < ga.size(); ++i) {
        double best = kInf;
        for (std::size_t j = 0; j < gb.size(); ++j) best = std::min(best, squared_distance(ga.points[i], gb.points[j]));
        EXPECT_LT(best, 1e-24);
    }
}

TEST(Grid, TooManyPointsIsConfigurationError) {
    const std::vector<double> shift(4, 0.0);
    EXPECT_THROW(grid_codebook(4, 3.0, shift, WindowSpec(4, 10.0)), ConfigurationError);
}

TEST(Palm, SmallIntensityIsEmpty) {
    const PalmScenario sc(PalmKind::PoissonSlivnyak, 3, -30.0, 0.0, WindowSpec(3, 5.0));
    int nonempty = 0;
    for (int i = 0; i < 1000; ++i) {
        Stream s(9, static_cast<std::uint64_t>(i));
        nonempty += !sample_palm_interferers(sc, s).empty();
    }
    EXPECT_EQ(nonempty, 0);
}

TEST(Palm, MaternHardCoreAroundOrigin) {
    const PalmScenario sc(PalmKind::Matern1Palm, 2, std::log(0.3), 1.0, WindowSpec(2, 8.0));
    for (int i = 0; i < 200; ++i) {
        Stream s(10, static_cast<std::uint64_t>(i));
        const auto pts = sample_palm_interferers(sc, s);
        for (std::size_t k = 0; k < pts.size(); ++k) EXPECT_GE(squared_norm(pts[k]), 1.0);
        EXPECT_GE(min_pair_distance(pts), 1.0);
    }
}

TEST(Palm, MaternAcceptanceRate) {
    const PalmScenario sc(PalmKind::Matern1Palm, 2, std::log(0.3), 1.0, WindowSpec(2, 6.0));
    const int attempts = 10000;
    int accepted = 0;
    for (int i = 0; i < attempts; ++i) {
        Stream s(11, static_cast<std::uint64_t>(i));
        accepted += matern_palm_attempt(sc, s).has_value();
    }
    const double p = std::exp(matern_palm_log_acceptance(sc));
    EXPECT_NEAR(p, std::exp(-0.3 * kPi), 1e-14);
    const double rate = static_cast<double>(accepted) / attempts;
    EXPECT_LT(std::abs(rate - p), 3.0 * std::sqrt(p * (1 - p) / attempts));
}

TEST(Palm, MaternImpossibleScenario) {
    const PalmScenario sc(PalmKind::Matern1Palm, 2, std::log(10.0), 1.5, WindowSpec(2, 6.0));
    Stream s(1, 1);
    EXPECT_THROW(sample_palm_interferers(sc, s), ScenarioError);
}

TEST(Palm, GridExcludesOrigin) {
    const PalmScenario sc(PalmKind::GridPalm, 2, 0.0, 0.0, WindowSpec(2, 2.1));
    Stream s(1, 1);
    const auto pts = sample_palm_interferers(sc, s);
    EXPECT_EQ(pts.size(), 12u);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_GT(squared_norm(pts[i]), 0.0);
}

TEST(Palm, MaternNeedsExclusionRadius) {
    EXPECT_THROW(PalmScenario(PalmKind::Matern1Palm, 2, 0.0, 0.0, WindowSpec(2, 1.0)), DomainError);
}

TEST(GridIndexTest, NoFalseNegatives) {
    Stream s(12, 0);
    const auto cfg = sample_poisson(WindowSpec(5, 3.0), 1.0, s);
    const GridIndex index(cfg.points, 0.8);
    for (int q = 0; q < 50; ++q) {
        std::vector<double> c(5);
        uniform_in_ball(5, 3.0, s, c);
        std::vector<char> seen(cfg.size(), 0);
        index.for_each_candidate(c, 0.8, [&](std::size_t i) { seen[i] = 1; });
        for (std::size_t i = 0; i < cfg.size(); ++i)
            if (squared_distance(c, cfg.points[i]) < 0.64) {
                EXPECT_TRUE(seen[i]);
            }
    }
}
