#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "decoding.hpp"
#include "errors.hpp"
#include "exact.hpp"
#include "experiment.hpp"
#include "exponents.hpp"
#include "geometry.hpp"
#include "montecarlo.hpp"
#include "noise.hpp"
#include "pointprocess.hpp"
#include "rng.hpp"
#include "trials.hpp"

namespace palmexp {

enum class Tier { Fast, Full };

inline const char* tier_name(Tier t) { return t == Tier::Fast ? "fast" : "full"; }

struct CheckContext {
    std::uint64_t seed;
    unsigned threads = 1;
};

struct CheckResult {
    bool pass;
    double measured;
    double tolerance;
    std::string note;
};

struct Check {
    std::string id;
    std::string title;
    Tier tier;
    bool stochastic;
    std::uint64_t default_seed;
    double budget_seconds;
    std::function<CheckResult(const CheckContext&)> run;
};

struct CheckReport {
    std::string id;
    std::string title;
    Tier tier;
    std::optional<std::uint64_t> seed;
    bool pass;
    double measured;
    double tolerance;
    double seconds;
    double budget_seconds;
    std::string note;
};

namespace detail {

// Running maximum of a discrepancy against a fixed tolerance.
struct Worst {
    explicit Worst(double tol) : tolerance(tol) {}

    double tolerance;
    double value = 0.0;
    bool ok = true;
    std::string where;

    void add(double diff, const std::string& at = {}) {
        if (!(diff <= tolerance)) ok = false;
        if (!(diff <= value)) {
            value = diff;
            where = at;
        }
    }

    CheckResult result(const std::string& note = {}) const {
        std::string n = note;
        if (!where.empty()) n += (n.empty() ? "" : "; ") + std::string("worst at ") + where;
        return {ok, value, tolerance, n};
    }
};

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

inline RunOptions check_runs(const CheckContext& ctx, std::uint64_t trials, std::uint64_t offset = 0) {
    RunOptions o;
    o.trials = trials;
    o.seed = ctx.seed + offset;
    o.threads = ctx.threads;
    return o;
}

inline PalmScenario poisson_wgn_scenario(int n, double alpha) {
    const double log_lambda = poisson_log_intensity(WhiteGaussian(1.0), n, alpha);
    return PalmScenario(PalmKind::PoissonSlivnyak, n, log_lambda, 0.0, WindowSpec(n, default_window_radius(n, 1.0)));
}

inline double z_score(double a, double b, double se) {
    if (se == 0.0) return a == b ? 0.0 : kInf;
    return std::abs(a - b) / se;
}

inline std::vector<double> linspace(double lo, double hi, int points) {
    std::vector<double> out;
    for (int i = 0; i < points; ++i) out.push_back(points == 1 ? lo : lo + (hi - lo) * i / (points - 1));
    return out;
}

// -------- acceptance criteria --------

inline CheckResult poltyrev_quadrature(const CheckContext&) {
    const WhiteGaussian m(1.0);
    Worst w(0.02);
    for (auto [alpha, target] : {std::pair{1.2, branches::poisson_wgn_low(1.2)}, std::pair{2.0, 0.5},
                                 std::pair{3.0, branches::poisson_wgn_high(3.0)}}) {
        const double rate = -poisson_mle_log_pe(m, 400, alpha).log_pe / 400.0;
        w.add(std::abs(rate - target), "alpha=" + fmt(alpha) + " rate=" + fmt(rate) + " target=" + fmt(target));
    }
    return w.result("n=400, WGN sigma=1");
}

inline CheckResult matern_quadrature(const CheckContext&) {
    const double rate = -matern_mle_log_pe_bound(WhiteGaussian(1.0), 400, 3.0, 0.01) / 400.0;
    return {std::abs(rate - 9.0 / 8.0) <= 0.05, std::abs(rate - 9.0 / 8.0), 0.05, "rate=" + fmt(rate) + " target=1.125"};
}

inline CheckResult two_dimensional_oracle(const CheckContext&) {
    const WhiteGaussian m(1.0);
    Worst w(1e-10);
    for (double alpha : {1.1, 1.5, 2.0, 3.0}) {
        const auto p = poisson_mle_log_pe(m, 2, alpha);
        const double lambda = std::exp(p.log_lambda);
        w.add(std::abs(std::exp(p.log_ps) - 1.0 / (1.0 + 2.0 * kPi * lambda)), "alpha=" + fmt(alpha));
    }
    return w.result();
}

inline CheckResult reduced_matches_quadrature(const CheckContext& ctx) {
    const WhiteGaussian m(1.0);
    const auto s = poisson_wgn_scenario(8, 1.5);
    const double exact = std::exp(poisson_log_probability(m, 8, s.log_lambda).log_pe);
    const auto e = estimate_pe(s, MleDecoder{}, m, McMode::Reduced, check_runs(ctx, 200000));
    const double z = z_score(e.mean, exact, e.std_error);
    return {z <= 3.0, z, 3.0, "mc=" + fmt(e.mean) + " quadrature=" + fmt(exact) + " (in standard errors)"};
}

inline CheckResult explicit_matches_reduced(const CheckContext& ctx) {
    const WhiteGaussian m(1.0);
    const auto s = poisson_wgn_scenario(4, 1.3);
    const auto ex = estimate_pe(s, MleDecoder{}, m, McMode::Explicit, check_runs(ctx, 20000));
    const auto re = estimate_pe(s, MleDecoder{}, m, McMode::Reduced, check_runs(ctx, 20000));
    const double z = z_score(ex.mean, re.mean, std::hypot(ex.std_error, re.std_error));
    const bool edges_ok = static_cast<double>(ex.edge_events) <= kEdgeBudget * static_cast<double>(ex.trials);
    return {z <= 3.0 && edges_ok, z, 3.0,
            "explicit=" + fmt(ex.mean) + " reduced=" + fmt(re.mean) + " edge_events=" + std::to_string(ex.edge_events)};
}

inline CheckResult mass_transport_identity(const CheckContext& ctx) {
    const WhiteGaussian m(1.0);
    const auto s = poisson_wgn_scenario(4, 1.3);
    const auto direct = estimate_pe(s, MleDecoder{}, m, McMode::Explicit, check_runs(ctx, 20000));
    const auto dual = estimate_pe_mass_transport(s, m, check_runs(ctx, 20000, 1));
    const double z = z_score(dual.mean, direct.mean, std::hypot(dual.std_error, direct.std_error));
    return {z <= 3.0 && dual.valid && direct.valid, z, 3.0, "direct=" + fmt(direct.mean) + " transport=" + fmt(dual.mean)};
}

inline CheckResult perturbation_identity(const CheckContext& ctx) {
    const double lambda = 0.05;
    const auto e = estimate_perturbation_integral(2, lambda, 1.0, check_runs(ctx, 100000));
    const double oracle = 2.0 * kPi / std::pow(1.0 + 2.0 * kPi * lambda, 2);
    const double z = z_score(e.mean, oracle, e.std_error);
    return {z <= 3.0 && e.valid, z, 3.0, "mc=" + fmt(e.mean) + " oracle=" + fmt(oracle)};
}

inline CheckResult branch_continuity(const CheckContext&) {
    using namespace branches;
    Worst w(1e-12);
    const double r2 = std::sqrt(2.0);
    w.add(std::abs(poisson_wgn_low(r2) - poisson_wgn_high(r2)), "gaussian poisson at sqrt2");
    w.add(std::abs(poisson_symexp_low(2.0) - poisson_symexp_high(2.0)), "symexp poisson at 2");
    w.add(std::abs(poisson_wgn_high(2.0) - matern_wgn_quadratic(2.0)), "poltyrev at 2");
    w.add(std::abs(poltyrev_exponent(std::nextafter(r2, 0.0)).exponent - poltyrev_exponent(r2).exponent), "poltyrev at sqrt2");
    w.add(std::abs(matern_symexp_low(2.0) - matern_symexp_mid(2.0)), "symexp matern at 2");
    w.add(std::abs(matern_symexp_mid(4.0) - matern_symexp_high(4.0)), "symexp matern at 4");
    for (double excl : {1.5, 2.0, 3.0, 5.0}) {
        // Lune radius and ball cost: branch formulas evaluated at their common breakpoint.
        const double b1 = excl / 2.0, b2 = excl / kSqrt2;
        w.add(std::abs(lune_middle_radius(b1, excl)), "lune at half, excl=" + fmt(excl));
        w.add(std::abs(lune_middle_radius(b2, excl) - b2), "lune at 1/sqrt2, excl=" + fmt(excl));
        const double middle = std::log(excl) - std::log(lune_middle_radius(b2, excl));
        w.add(std::abs(middle - positive_part(std::log(excl) - std::log(b2))), "ball cost at 1/sqrt2, excl=" + fmt(excl));
    }
    return w.result();
}

inline CheckResult numeric_matches_closed_form(const CheckContext&) {
    Worst w(1e-6);
    const double grid[] = {1.05, 1.2, std::sqrt(2.0), 1.8, 2.5, 4.0};
    const std::vector<NoiseModel> models{WhiteGaussian(1.0), WhiteSymExp(1.0), WhiteUniform(1.0)};
    for (const auto& m : models) {
        for (double a : grid) {
            double closed = 0.0;
            if (std::holds_alternative<WhiteGaussian>(m))
                closed = a < std::sqrt(2.0) ? branches::poisson_wgn_low(a) : branches::poisson_wgn_high(a);
            else if (std::holds_alternative<WhiteSymExp>(m))
                closed = a < 2.0 ? branches::poisson_symexp_low(a) : branches::poisson_symexp_high(a);
            else
                closed = std::log(a);
            const double numeric = poisson_exponent_numeric(m, a).exponent;
            const double diff = std::abs(numeric - closed);
            if (std::holds_alternative<WhiteUniform>(m) && diff != 0.0) w.add(kInf, "uniform not exact at alpha=" + fmt(a));
            w.add(diff, model_name(m) + " alpha=" + fmt(a));
        }
    }
    return w.result("Poisson infimum, 6-point grid");
}

inline CheckResult colored_reduction(const CheckContext&) {
    const double sigma = 1.3;
    const WhiteGaussian white(sigma);
    const auto flat = ColoredGaussian::flat(sigma, 64);
    const auto ar1 = ColoredGaussian::ar1(0.5, 1.0, 64);
    Worst w(1.0);
    auto ratio = [&](double diff, double tol, const std::string& at) { w.add(diff / tol, at); };
    ratio(std::abs(entropy_rate(flat) - entropy_rate(white)), 1e-8, "entropy rate");
    for (double alpha : {1.2, 1.5, 2.0}) {
        const double a = poisson_mle_log_pe(flat, 10, alpha).log_pe;
        const double b = poisson_mle_log_pe(white, 10, alpha).log_pe;
        ratio(std::abs(std::exp(a) - std::exp(b)), 1e-10, "p_e n=10 alpha=" + fmt(alpha));
    }
    for (double alpha : {1.05, 1.2, std::sqrt(2.0), 1.8, 2.5, 4.0}) {
        const double ref = poisson_exponent(white, alpha).exponent;
        ratio(std::abs(poisson_exponent_numeric(flat, alpha).exponent - ref), 1e-6, "flat exponent alpha=" + fmt(alpha));
        ratio(std::abs(poisson_exponent_numeric(ar1, alpha).exponent - ref), 1e-6, "ar1 exponent alpha=" + fmt(alpha));
    }
    return w.result("discrepancy as a fraction of its tolerance");
}

inline CheckResult capacity_dichotomy_all(const CheckContext&) {
    const WhiteGaussian m(1.0);
    std::vector<std::string> failures;
    const double pe_low = std::exp(poisson_mle_log_pe(m, 200, 0.8).log_pe);
    const double pe_high = std::exp(poisson_mle_log_pe(m, 200, 2.0).log_pe);
    if (!(pe_low > 0.99)) failures.push_back("p_e(alpha=0.8)=" + fmt(pe_low));
    if (!(pe_high < 0.01)) failures.push_back("p_e(alpha=2)=" + fmt(pe_high));
    const std::vector<NoiseModel> models{WhiteGaussian(1.0), WhiteSymExp(1.0), WhiteUniform(1.0)};
    for (const auto& model : models) {
        std::vector<double> bounds;
        for (int n : {50, 100, 200, 400})
            bounds.push_back(typicality_log_pe_bound(model, n, poisson_log_intensity(model, n, 2.0) / n, 0.2));
        for (std::size_t i = 1; i < bounds.size(); ++i)
            if (!(bounds[i] < bounds[i - 1])) failures.push_back(model_name(model) + " typicality bound not decreasing");
        if (!(bounds.back() < bounds.front() + std::log(0.01))) failures.push_back(model_name(model) + " typicality bound decay");
    }
    double prev = 0.0;
    for (int n : {1, 10, 100, 400}) {
        const double lps = grid_log_ps(n, 0.0, 1.0);
        if (!(lps < prev)) failures.push_back("grid p_s not decreasing at n=" + std::to_string(n));
        prev = lps;
    }
    if (!(prev < std::log(1e-100))) failures.push_back("grid p_s at n=400 is " + fmt(std::exp(prev)));
    std::string note = "p_e(0.8)=" + fmt(pe_low) + " p_e(2)=" + fmt(pe_high) + " grid ln p_s(400)=" + fmt(prev);
    for (const auto& f : failures) note += "; " + f;
    return {failures.empty(), static_cast<double>(failures.size()), 0.0, note};
}

inline CheckResult shannon_transfer(const CheckContext&) {
    Worst w(1e-12);
    bool ordered = true;
    const std::vector<NoiseModel> models{WhiteGaussian(1.0), WhiteGaussian(2.5), WhiteSymExp(1.0), WhiteUniform(1.0)};
    for (const auto& m : models) {
        for (double P : {0.1, 1.0, 10.0, 100.0}) {
            const auto b = shannon_capacity_bounds(m, P);
            ordered = ordered && b.lower <= b.upper;
            w.add(std::abs(b.upper - b.lower - 0.5 * std::log(1.0 + noise_variance(m) / P)), model_name(m) + " P=" + fmt(P));
        }
    }
    const std::vector<double> alphas = linspace(1.0, 10.0, 40);
    const auto curve = shannon_exponent_curve(WhiteGaussian(1.0), 10.0, alphas, CodebookKind::Poisson, RateForm::AwgnSnr);
    bool found = false, monotone = true;
    for (std::size_t i = 0; i < curve.rows.size(); ++i) {
        const auto& r = curve.rows[i];
        if (r.alpha == 1.0) found = std::abs(r.x - 2.30756025842063) < 1e-12 && r.exponent == 0.0;
        if (i > 0 && !(r.exponent <= curve.rows[i - 1].exponent)) monotone = false;
    }
    CheckResult out = w.result();
    out.pass = out.pass && ordered && found && monotone;
    out.note += std::string(ordered ? "" : " bounds unordered") + (found ? "" : " missing (2.30756, 0) row") +
                (monotone ? "" : " curve not monotone");
    return out;
}

// -------- geometry --------

inline CheckResult ball_volume_monte_carlo(const CheckContext& ctx) {
    Worst w(0.01);
    std::uint64_t id = 0;
    for (int n = 1; n <= 6; ++n) {
        for (double r : {0.5, 1.0, 2.0}) {
            Stream s(ctx.seed, id++);
            const std::uint64_t samples = 1000000;
            std::uint64_t hits = 0;
            for (std::uint64_t i = 0; i < samples; ++i) {
                double sq = 0.0;
                for (int k = 0; k < n; ++k) {
                    const double x = s.uniform(-r, r);
                    sq += x * x;
                }
                hits += sq < r * r ? 1 : 0;
            }
            const double mc = std::pow(2.0 * r, n) * static_cast<double>(hits) / static_cast<double>(samples);
            const double exact = std::exp(log_ball_volume(n, r));
            w.add(std::abs(mc / exact - 1.0), "n=" + std::to_string(n) + " r=" + fmt(r));
        }
    }
    return w.result("relative error, 1e6 samples each");
}

inline CheckResult gamma_sandwich(const CheckContext&) {
    const double log_k = std::log(1.1);
    Worst w(log_k);
    bool lower_ok = true;
    for (int x = 1; x <= 200; ++x) {
        const double lower = x * (std::log(x) - 1.0) + 0.5 * std::log(2.0 * kPi / x);
        const double gap = log_gamma(x) - lower;
        lower_ok = lower_ok && gap >= 0.0;
        w.add(gap, "x=" + std::to_string(x));
    }
    CheckResult out = w.result("ln Gamma minus the lower bound, K=1.1");
    out.pass = out.pass && lower_ok;
    return out;
}

inline constexpr double kVolumeSandwichConstant = 0.6;

inline CheckResult volume_sandwich(const CheckContext&) {
    Worst w(kVolumeSandwichConstant);
    for (int n : {10, 11, 20, 50, 100, 200, 400, 500}) {
        for (double v : {0.25, 1.0, 4.0}) {
            const double diff = 0.5 * n * std::log(2.0 * std::exp(1.0) * kPi * v) - log_ball_volume(n, std::sqrt(n * v));
            w.add(std::abs(diff - 0.5 * std::log(n + 2.0)), "n=" + std::to_string(n) + " v=" + fmt(v));
        }
    }
    return w.result("frozen constant 0.6");
}

inline CheckResult chi_scaling(const CheckContext& ctx) {
    Worst w(1e-12);
    Stream s(ctx.seed, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(s.uniform() * 60.0);
        const double sigma = s.uniform(0.2, 5.0);
        const double r = sigma * s.uniform(0.05, 2.0) * std::sqrt(static_cast<double>(n));
        const double lhs = chi_density_log(n, sigma, r);
        const double rhs = chi_density_log(n, 1.0, r / sigma) - std::log(sigma);
        w.add(std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)),
              "n=" + std::to_string(n) + " sigma=" + fmt(sigma) + " r=" + fmt(r));
    }
    return w.result("relative error of the density");
}

inline CheckResult lune_continuity(const CheckContext&) {
    Worst w(1e-12);
    for (double excl : {0.5, 1.0, 2.0, 3.7, 10.0}) {
        w.add(std::abs(lune_middle_radius(excl / 2.0, excl) - 0.0), "half, excl=" + fmt(excl));
        w.add(std::abs(lune_middle_radius(excl / kSqrt2, excl) - excl / kSqrt2), "1/sqrt2, excl=" + fmt(excl));
        w.add(std::abs(matern_lune_radius(excl / kSqrt2, excl) - lune_middle_radius(excl / kSqrt2, excl)),
              "right limit at 1/sqrt2, excl=" + fmt(excl));
    }
    return w.result("branch formulas at the breakpoints");
}

// -------- noise --------

inline std::vector<NoiseModel> rate_models() {
    return {WhiteGaussian(1.0), WhiteSymExp(0.7), ColoredGaussian::ar1(0.5, 1.0, 64), ColoredGaussian::flat(2.0, 16)};
}

inline CheckResult rate_function_shape(const CheckContext&) {
    Worst w(1e-9);
    bool nonneg = true;
    for (const auto& m : rate_models()) {
        const double h = entropy_rate(m);
        const double t = rate_threshold(m);
        w.add(std::abs(rate_function(m, h)), model_name(m) + " at h");
        const auto grid = linspace(t + 0.02, t + 20.0, 50);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double v = rate_function(m, grid[i]);
            nonneg = nonneg && v >= 0.0;
            if (i + 2 < grid.size()) {
                const double mid = rate_function(m, grid[i + 1]);
                const double chord = 0.5 * (v + rate_function(m, grid[i + 2]));
                w.add(positive_part(mid - chord), model_name(m) + " convexity at u=" + fmt(grid[i + 1]));
            }
        }
    }
    const WhiteUniform u(1.0);
    w.add(std::abs(rate_function(u, entropy_rate(u))), "uniform at h");
    CheckResult out = w.result();
    out.pass = out.pass && nonneg;
    return out;
}

inline CheckResult level_volume_identity(const CheckContext& ctx) {
    Worst w(0.05);
    const WhiteGaussian m(1.0);
    const double h = entropy_rate(m);
    std::uint64_t id = 0;
    for (int n : {2, 5, 10}) {
        const double levels[] = {h - 0.2, h, h + 0.2};
        double sums[3] = {0.0, 0.0, 0.0};
        const std::uint64_t samples = 1000000;
        std::vector<double> d(static_cast<std::size_t>(n));
        for (std::uint64_t i = 0; i < samples; ++i) {
            Stream s(ctx.seed + static_cast<std::uint64_t>(n), id++);
            sample_into(m, d, s);
            const double u = -log_density(m, d) / n;
            for (int k = 0; k < 3; ++k)
                if (u <= levels[k]) sums[k] += std::exp(n * u);
        }
        for (int k = 0; k < 3; ++k) {
            const double mc = sums[k] / static_cast<double>(samples);
            const double exact = std::exp(stun_level_log_volume(m, n, levels[k]));
            w.add(std::abs(mc / exact - 1.0), "n=" + std::to_string(n) + " u=h" + fmt(levels[k] - h));
        }
    }
    return w.result("relative error, 1e6 entropy-spectrum samples");
}

inline CheckResult entropy_spectrum_mean(const CheckContext& ctx) {
    Worst w(4.0);
    const std::vector<NoiseModel> models{WhiteGaussian(1.0),
                                         WhiteSymExp(1.0),
                                         WhiteUniform(1.0),
                                         ColoredGaussian::flat(1.3, 128),
                                         ColoredGaussian::ar1(0.25, 1.0, 128),
                                         MarkovGaussianAR1(0.25, 1.0)};
    const int n = 100;
    std::uint64_t offset = 0;
    for (const auto& m : models) {
        RunOptions o = check_runs(ctx, 100000, offset++);
        const auto e = run_trials(o, [&](Stream& s, std::uint64_t) { return TrialOutcome{entropy_spectrum_sample(m, n, s).u}; });
        const double h = entropy_rate(m);
        const double diff = std::abs(e.mean - h);
        w.add(e.std_error == 0.0 ? (diff <= 1e-12 * std::abs(h) ? 0.0 : kInf) : diff / e.std_error, model_name(m));
    }
    return w.result("|mean - h| in standard errors, n=100, 1e5 samples");
}

inline CheckResult stun_translation(const CheckContext& ctx) {
    const std::vector<NoiseModel> models{WhiteGaussian(1.0), WhiteSymExp(1.0), WhiteUniform(1.0),
                                         ColoredGaussian::ar1(0.5, 1.0, 16), MarkovGaussianAR1(0.5, 1.0)};
    Stream s(ctx.seed, 0);
    int mismatches = 0;
    for (const auto& m : models) {
        for (int trial = 0; trial < 200; ++trial) {
            const int n = 1 + trial % 8;
            std::vector<double> a(static_cast<std::size_t>(n)), b(a.size()), diff(a.size()), zero(a.size(), 0.0);
            for (std::size_t k = 0; k < a.size(); ++k) {
                a[k] = s.uniform(-2.0, 2.0);
                b[k] = s.uniform(-2.0, 2.0);
                diff[k] = a[k] - b[k];
            }
            const double lhs = stun(m, a, b), rhs = stun(m, diff, zero);
            if (!(lhs == rhs || (std::isinf(lhs) && lhs == rhs))) ++mismatches;
        }
    }
    return {mismatches == 0, static_cast<double>(mismatches), 0.0, "exact equality on 1000 pairs"};
}

inline CheckResult log_det_drift(const CheckContext&) {
    const auto m = ColoredGaussian::ar1(0.5, 1.0, 256);
    std::vector<double> drift;
    std::string note;
    for (int n : {10, 50, 200}) {
        drift.push_back(std::abs(m.log_det(n) / n - m.spectral_log_integral()));
        note += "n=" + std::to_string(n) + ":" + fmt(drift.back()) + " ";
    }
    int increases = 0;
    for (std::size_t i = 1; i < drift.size(); ++i) increases += drift[i] < drift[i - 1] ? 0 : 1;
    return {increases == 0, static_cast<double>(increases), 0.0, note};
}

// -------- point processes --------

inline CheckResult matern_hard_core(const CheckContext& ctx) {
    int violations = 0;
    std::uint64_t id = 0;
    std::size_t checked = 0;
    for (int n : {1, 2, 3, 4}) {
        for (double r : {0.3, 1.0, 2.0}) {
            Stream s(ctx.seed, id++);
            const WindowSpec w(n, 6.0);
            const double log_lambda = std::log(20.0 / std::exp(log_ball_volume(n, 6.0)));
            for (int trial = 0; trial < 50; ++trial) {
                const auto thinned = matern1_thin(sample_poisson(w, log_lambda, s), r);
                for (std::size_t i = 0; i < thinned.size(); ++i)
                    for (std::size_t j = i + 1; j < thinned.size(); ++j) {
                        ++checked;
                        if (squared_distance(thinned.points[i], thinned.points[j]) < r * r) ++violations;
                    }
            }
        }
    }
    return {violations == 0, static_cast<double>(violations), 0.0, std::to_string(checked) + " pairs checked"};
}

inline CheckResult matern_stun_equivalence(const CheckContext& ctx) {
    int mismatches = 0;
    std::uint64_t id = 0;
    for (int n : {1, 2, 3, 5}) {
        for (double sigma : {0.5, 1.0}) {
            const WhiteGaussian m(sigma);
            const double floor = 0.5 * std::log(2.0 * kPi * sigma * sigma);
            for (double excess : {0.05, 0.5, 1.5}) {
                Stream s(ctx.seed, id++);
                const double xi = floor + excess;
                const WindowSpec w(n, 8.0 * sigma);
                const double log_lambda = std::log(40.0 / std::exp(log_ball_volume(n, w.radius)));
                for (int trial = 0; trial < 20; ++trial) {
                    const auto base = sample_poisson(w, log_lambda, s);
                    const auto a = matern_stun_thin(base, m, xi);
                    const auto b = matern1_thin(base, wgn_exclusion_radius(n, sigma, xi));
                    if (!(a.points == b.points)) ++mismatches;
                }
            }
        }
    }
    return {mismatches == 0, static_cast<double>(mismatches), 0.0, "identical point sets on 480 configurations"};
}

inline CheckResult typical_ball_void(const CheckContext& ctx) {
    const int n = 4;
    const double delta = 0.2, sigma = 1.0;
    const double radius = 2.0 * std::sqrt(static_cast<double>(n)) * sigma * std::sqrt(1.0 + 2.0 * delta);
    // Intensity giving an even void probability.
    const double log_lambda = std::log(std::log(2.0)) - log_ball_volume(n, radius);
    const double alpha = std::exp(-log_lambda / n - entropy_rate(WhiteGaussian(sigma)));
    const double exact = coverage_prob_typ_in_voronoi(n, alpha, delta, sigma);
    const WindowSpec w(n, default_window_radius(n, sigma));
    RunOptions o = check_runs(ctx, 20000);
    o.error = ErrorModel::Binomial;
    const auto e = run_trials(o, [&](Stream& s, std::uint64_t) {
        const auto pts = sample_poisson_points(w, log_lambda, s);
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (squared_norm(pts[i]) < radius * radius) return TrialOutcome{0.0};
        return TrialOutcome{1.0};
    });
    const double z = z_score(e.mean, exact, e.std_error);
    return {z <= 3.0, z, 3.0, "empirical=" + fmt(e.mean) + " closed form=" + fmt(exact)};
}

inline CheckResult poisson_void_probability(const CheckContext& ctx) {
    Worst w(3.0);
    const int n = 3;
    const WindowSpec window(n, 10.0);
    const double log_lambda = std::log(0.05);
    Stream picker(ctx.seed, 0);
    for (int c = 0; c < 5; ++c) {
        std::vector<double> center(static_cast<std::size_t>(n));
        uniform_in_ball(n, 4.0, picker, center);
        const double r = picker.uniform(1.0, 3.0);
        const double exact = std::exp(-std::exp(log_lambda + log_ball_volume(n, r)));
        RunOptions o = check_runs(ctx, 20000, 1 + static_cast<std::uint64_t>(c));
        o.error = ErrorModel::Binomial;
        const auto e = run_trials(o, [&](Stream& s, std::uint64_t) {
            const auto pts = sample_poisson_points(window, log_lambda, s);
            for (std::size_t i = 0; i < pts.size(); ++i)
                if (squared_distance(pts[i], center) < r * r) return TrialOutcome{0.0};
            return TrialOutcome{1.0};
        });
        w.add(z_score(e.mean, exact, e.std_error), "r=" + fmt(r) + " empirical=" + fmt(e.mean) + " exact=" + fmt(exact));
    }
    return w.result("standard errors");
}

// -------- decoding --------

inline PointSet random_interferers(int n, int count, double spread, Stream& s) {
    PointSet pts(n);
    std::vector<double> p(static_cast<std::size_t>(n));
    for (int i = 0; i < count; ++i) {
        for (auto& x : p) x = s.uniform(-spread, spread);
        pts.push_back(p);
    }
    return pts;
}

inline CheckResult gaussian_ball_matches_stun(const CheckContext& ctx) {
    Stream s(ctx.seed, 0);
    int mismatches = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = 1 + trial % 8;
        const WhiteGaussian m(s.uniform(0.5, 2.0));
        const auto pts = random_interferers(n, 1 + trial % 6, 3.0, s);
        const auto d = sample(m, n, s);
        if (mle_success(m, pts, d).status != stun_rule(m, pts, d).status) ++mismatches;
    }
    return {mismatches == 0, static_cast<double>(mismatches), 0.0, "10^4 instances, n <= 8"};
}

inline CheckResult flat_mahalanobis_matches_euclid(const CheckContext& ctx) {
    Stream s(ctx.seed, 0);
    int mismatches = 0;
    const auto flat = ColoredGaussian::flat(1.3, 8);
    const WhiteGaussian white(1.3);
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = 1 + trial % 8;
        const auto pts = random_interferers(n, 1 + trial % 6, 3.0, s);
        const auto d = sample(white, n, s);
        if (mle_success(flat, pts, d).status != mle_success(white, pts, d).status) ++mismatches;
    }
    return {mismatches == 0, static_cast<double>(mismatches), 0.0, "10^4 instances, n <= 8"};
}

inline CheckResult removal_monotonicity(const CheckContext& ctx) {
    const std::vector<NoiseModel> models{WhiteGaussian(1.0), WhiteSymExp(1.0), WhiteUniform(1.0),
                                         ColoredGaussian::ar1(0.5, 1.0, 8), MarkovGaussianAR1(0.5, 1.0)};
    Stream s(ctx.seed, 0);
    int violations = 0, successes = 0;
    for (const auto& m : models) {
        for (int trial = 0; trial < 1000; ++trial) {
            const int n = 1 + trial % 6;
            const auto pts = random_interferers(n, 2 + trial % 5, 3.0, s);
            const auto d = sample(m, n, s);
            if (!mle_success(m, pts, d).decoded()) continue;
            ++successes;
            for (std::size_t skip = 0; skip < pts.size(); ++skip) {
                PointSet fewer(n);
                for (std::size_t i = 0; i < pts.size(); ++i)
                    if (i != skip) fewer.push_back(pts[i]);
                if (!mle_success(m, fewer, d).decoded()) ++violations;
            }
        }
    }
    return {violations == 0, static_cast<double>(violations), 0.0, std::to_string(successes) + " successful instances"};
}

inline CheckResult no_ambiguity(const CheckContext& ctx) {
    const WhiteGaussian m(1.0);
    const auto s = poisson_wgn_scenario(2, 1.5);
    RunOptions o = check_runs(ctx, 1000000);
    o.batch_size = 16384;
    const auto e = run_trials(o, [&](Stream& st, std::uint64_t) {
        const auto pts = sample_palm_interferers(s, st);
        std::vector<double> d(2);
        sample_into(m, d, st);
        return TrialOutcome{mle_success(m, pts, d).status == DecodeStatus::Ambiguous ? 1.0 : 0.0};
    });
    const double count = std::round(e.mean * static_cast<double>(e.trials));
    return {count == 0.0, count, 0.0, "ambiguous outcomes in 10^6 WGN trials"};
}

// -------- exact --------

inline CheckResult derivative_consistency(const CheckContext&) {
    Worst w(1e-6);
    const WhiteGaussian m(1.0);
    for (int n : {2, 5, 10}) {
        for (double alpha : {1.2, 1.5, 2.5}) {
            const double lambda = std::exp(poisson_log_intensity(m, n, alpha));
            auto ps = [&](double l) { return std::exp(poisson_log_probability(m, n, std::log(l)).log_ps); };
            auto central = [&](double step) { return (ps(lambda + step) - ps(lambda - step)) / (2.0 * step); };
            const double step = 1e-3 * lambda;
            const double richardson = (4.0 * central(step / 2.0) - central(step)) / 3.0;
            const double exact = dps_dlambda(n, lambda, 1.0);
            w.add(std::abs(richardson / exact - 1.0), "n=" + std::to_string(n) + " alpha=" + fmt(alpha));
        }
    }
    return w.result("relative error of Richardson central differences");
}

inline CheckResult capacity_dichotomy_wgn(const CheckContext&) {
    const WhiteGaussian m(1.0);
    const double low = std::exp(poisson_mle_log_pe(m, 200, 0.8).log_pe);
    const double high = std::exp(poisson_mle_log_pe(m, 200, 2.0).log_pe);
    const bool ok = low > 0.99 && high < 0.01;
    return {ok, high, 0.01, "p_e(alpha=0.8)=" + fmt(low) + " p_e(alpha=2)=" + fmt(high)};
}

inline CheckResult typicality_decay_wgn(const CheckContext&) {
    const WhiteGaussian m(1.0);
    std::vector<double> b;
    for (int n : {50, 100, 200, 400}) b.push_back(typicality_log_pe_bound(m, n, poisson_log_intensity(m, n, 2.0) / n, 0.2));
    bool decreasing = true;
    for (std::size_t i = 1; i < b.size(); ++i) decreasing = decreasing && b[i] < b[i - 1];
    const double drop = b.back() - b.front();
    return {decreasing && drop < std::log(0.01), drop, std::log(0.01), "log ratio final/initial"};
}

inline CheckResult matern_integrand_cutoff(const CheckContext&) {
    int nonzero = 0;
    for (const NoiseModel& m : {NoiseModel(WhiteGaussian(1.0)), NoiseModel(WhiteSymExp(1.0))}) {
        for (int n : {10, 100, 400}) {
            const double excl = 3.0 - 0.01;
            for (double v : linspace(1e-3, excl / 2.0, 50)) {
                const double x = std::min(v, std::nextafter(excl / 2.0, 0.0));
                if (matern_bound_log_integrand(m, n, 3.0, 0.01, x) != kNegInf) ++nonzero;
            }
        }
    }
    return {nonzero == 0, static_cast<double>(nonzero), 0.0, "grid points below half the exclusion radius with nonzero load"};
}

// -------- exponents --------

inline CheckResult colored_exponent_reduction(const CheckContext&) {
    Worst w(1e-6);
    const auto ar1 = ColoredGaussian::ar1(0.5, 1.0, 64);
    const WhiteGaussian white(1.0);
    for (double a : linspace(1.0, 6.0, 26))
        w.add(std::abs(poisson_exponent_numeric(ar1, a).exponent - poisson_exponent(white, a).exponent), "alpha=" + fmt(a));
    return w.result("AR1 spectrum");
}

inline CheckResult poltyrev_combines_regimes(const CheckContext&) {
    Worst w(1e-9);
    const WhiteGaussian g(1.0);
    for (double a : linspace(1.0, 6.0, 101)) {
        const double p = poltyrev_exponent(a).exponent;
        const double regime = a < 2.0 ? poisson_exponent(g, a).exponent : matern_exponent(g, a).exponent;
        w.add(std::abs(p - regime), "regime alpha=" + fmt(a));
        w.add(std::abs(p - std::max(poisson_exponent(g, a).exponent, matern_exponent(g, a).exponent)), "max alpha=" + fmt(a));
    }
    return w.result("each regime on its own range; combined as the larger exponent");
}

inline CheckResult exponents_monotone(const CheckContext&) {
    int violations = 0;
    const auto grid = linspace(1.0, 6.0, 100);
    auto scan = [&](const std::function<double(double)>& f) {
        double prev = -kInf;
        for (double a : grid) {
            const double e = f(a);
            if (!(e >= 0.0) || !(e >= prev)) ++violations;
            prev = e;
        }
    };
    const std::vector<NoiseModel> models{WhiteGaussian(1.0), WhiteSymExp(1.0), WhiteUniform(1.0)};
    for (const auto& m : models) {
        scan([&](double a) { return poisson_exponent(m, a).exponent; });
        if (!std::holds_alternative<WhiteUniform>(m)) scan([&](double a) { return matern_exponent(m, a).exponent; });
    }
    scan([](double a) { return poltyrev_exponent(a).exponent; });
    return {violations == 0, static_cast<double>(violations), 0.0, "100-point grid on [1, 6]"};
}

// -------- montecarlo --------

inline CheckResult thread_determinism(const CheckContext& ctx) {
    const WhiteGaussian m(1.0);
    const auto s = poisson_wgn_scenario(4, 1.3);
    int differences = 0;
    for (McMode mode : {McMode::Explicit, McMode::Reduced}) {
        RunOptions o = check_runs(ctx, 4000);
        o.batch_size = 256;
        Estimate ref;
        for (unsigned threads : {1u, 2u, 4u}) {
            o.threads = threads;
            const auto e = estimate_pe(s, MleDecoder{}, m, mode, o);
            if (threads == 1) ref = e;
            else if (!(e == ref)) ++differences;
        }
    }
    return {differences == 0, static_cast<double>(differences), 0.0, "estimates compared bitwise at 1, 2, 4 threads"};
}

inline CheckResult interval_calibration(const CheckContext& ctx) {
    int covered = 0;
    const int reps = 1000;
    for (int rep = 0; rep < reps; ++rep) {
        RunOptions o = check_runs(ctx, 1000, static_cast<std::uint64_t>(rep) * 7919);
        o.error = ErrorModel::Binomial;
        const auto e = run_trials(o, [](Stream& s, std::uint64_t) { return TrialOutcome{s.uniform() < 0.3 ? 1.0 : 0.0}; });
        covered += e.ci_lo <= 0.3 && 0.3 <= e.ci_hi ? 1 : 0;
    }
    const double rate = static_cast<double>(covered) / reps;
    return {rate >= 0.93, rate, 0.93, "coverage of p=0.3 over 1000 runs of 1000 trials"};
}

inline CheckResult rao_blackwell(const CheckContext& ctx) {
    const WhiteGaussian m(1.0);
    const auto s = poisson_wgn_scenario(4, 1.3);
    const auto ex = estimate_pe(s, MleDecoder{}, m, McMode::Explicit, check_runs(ctx, 20000));
    const auto re = estimate_pe(s, MleDecoder{}, m, McMode::Reduced, check_runs(ctx, 20000));
    return {re.std_error <= ex.std_error, re.std_error / ex.std_error, 1.0, "reduced SE over explicit SE"};
}

inline CheckResult grid_scenario(const CheckContext& ctx) {
    Worst w(3.0);
    for (int n : {1, 2}) {
        const WindowSpec window(n, default_window_radius(n, 1.0, 0.0, 0.0));
        const PalmScenario s(PalmKind::GridPalm, n, 0.0, 0.0, window);
        const auto e = estimate_pe(s, MleDecoder{}, WhiteGaussian(1.0), McMode::Explicit, check_runs(ctx, 20000));
        const double ps = std::exp(grid_log_ps(n, 0.0, 1.0));
        w.add(z_score(1.0 - e.mean, ps, e.std_error), "n=" + std::to_string(n));
    }
    return w.result("standard errors");
}

// -------- cli --------

inline ExperimentConfig sample_config(const std::string& command, const std::filesystem::path& out) {
    Json j;
    if (command == "exponent") {
        j = {{"noise", {{"kind", "wgn"}, {"sigma", 1.0}}},
             {"codebook", {{"kind", "poisson"}}},
             {"sweep", {{"alpha_grid", {{"from", 1.05}, {"to", 4.0}, {"points", 60}}}}}};
    } else {
        j = {{"noise", {{"kind", "wgn"}, {"sigma", 1.0}}},
             {"codebook", {{"kind", "poisson"}}},
             {"sweep", {{"n_list", {2, 4}}}},
             {"alpha", 1.3},
             {"mc", {{"trials", 2000}, {"seed", 9}, {"mode", "explicit"}}}};
    }
    j["output"] = {{"path", out.string()}, {"format", "csv"}};
    return parse_config(j, command);
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline Json stable_sidecar(const std::filesystem::path& p) {
    Json j = Json::parse(read_file(p));
    j.erase("timestamp");
    j.erase("row_wall_clock_seconds");
    j.erase("total_wall_clock_seconds");
    return j;
}

struct ScratchDir {
    std::filesystem::path path;
    ScratchDir() {
        path = std::filesystem::temp_directory_path() /
               ("palmexp-check-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
        std::filesystem::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

inline CheckResult rerun_reproduces(const CheckContext&) {
    ScratchDir dir;
    int differences = 0;
    for (const std::string command : {"exponent", "pe-mc"}) {
        std::string table[2];
        Json meta[2];
        for (int run = 0; run < 2; ++run) {
            const auto out = dir.path / (command + std::to_string(run) + ".csv");
            auto c = sample_config(command, out);
            std::ostringstream unused;
            write_outputs(c, run_experiment(c), unused);
            table[run] = read_file(out);
            meta[run] = stable_sidecar(out.string() + ".meta.json");
            meta[run]["config"].erase("output");
        }
        differences += table[0] == table[1] ? 0 : 1;
        differences += meta[0] == meta[1] ? 0 : 1;
    }
    return {differences == 0, static_cast<double>(differences), 0.0, "exponent and pe-mc outputs written twice"};
}

inline CheckResult sidecar_schema(const CheckContext&) {
    ScratchDir dir;
    int problems = 0;
    for (const std::string command : {"exponent", "pe-mc"}) {
        const auto out = dir.path / (command + ".csv");
        auto c = sample_config(command, out);
        std::ostringstream unused;
        write_outputs(c, run_experiment(c), unused);
        const Json meta = Json::parse(read_file(out.string() + ".meta.json"));
        problems += meta.value("schema_version", -1) == kSchemaVersion ? 0 : 1;
        const std::string text = read_file(out);
        std::string header;
        for (const auto& col : output_columns(command)) header += (header.empty() ? "" : ",") + col;
        problems += text.rfind(header + "\n", 0) == 0 ? 0 : 1;
    }
    return {problems == 0, static_cast<double>(problems), 0.0, "schema_version " + std::to_string(kSchemaVersion)};
}

} // namespace detail

// Acceptance criteria AC1 to AC12.
inline std::vector<Check> acceptance_checks() {
    using namespace detail;
    return {
        {"AC1", "Poltyrev exponent via quadrature at n=400", Tier::Fast, false, 0, 15.0, poltyrev_quadrature},
        {"AC2", "Matern exponent via bound quadrature at n=400", Tier::Fast, false, 0, 10.0, matern_quadrature},
        {"AC3", "n=2 quadrature equals 1/(1+2 pi lambda sigma^2)", Tier::Fast, false, 0, 1.0, two_dimensional_oracle},
        {"AC4", "reduced Monte Carlo agrees with quadrature", Tier::Fast, true, 401, 10.0, reduced_matches_quadrature},
        {"AC5", "explicit and reduced estimators agree", Tier::Fast, true, 501, 60.0, explicit_matches_reduced},
        {"AC6", "mass transport identity", Tier::Fast, true, 601, 60.0, mass_transport_identity},
        {"AC7", "perturbation identity", Tier::Fast, true, 701, 60.0, perturbation_identity},
        {"AC8", "branch continuity of piecewise exponents", Tier::Fast, false, 0, 1.0, branch_continuity},
        {"AC9", "numeric infimum matches closed forms", Tier::Fast, false, 0, 5.0, numeric_matches_closed_form},
        {"AC10", "colored noise reduces to white noise", Tier::Fast, false, 0, 30.0, colored_reduction},
        {"AC11", "capacity dichotomy", Tier::Fast, false, 0, 30.0, capacity_dichotomy_all},
        {"AC12", "Shannon transfer", Tier::Fast, false, 0, 5.0, shannon_transfer},
    };
}

// Invariants of every module; together they make up AC13.
inline std::vector<Check> property_checks() {
    using namespace detail;
    return {
        {"geometry.ball-volume-mc", "ball volume matches hit-or-miss", Tier::Full, true, 11, 60.0, ball_volume_monte_carlo},
        {"geometry.gamma-sandwich", "Gamma sandwich with K=1.1", Tier::Fast, false, 0, 1.0, gamma_sandwich},
        {"geometry.volume-sandwich", "ball volume sandwich", Tier::Fast, false, 0, 1.0, volume_sandwich},
        {"geometry.chi-scaling", "chi density scaling law", Tier::Fast, true, 14, 1.0, chi_scaling},
        {"geometry.lune-continuity", "lune radius continuity", Tier::Fast, false, 0, 1.0, lune_continuity},
        {"noise.rate-function", "rate function nonnegative and convex", Tier::Fast, false, 0, 1.0, rate_function_shape},
        {"noise.level-volume", "level volume equals E[e^{nU} 1(U <= u)]", Tier::Full, true, 22, 60.0, level_volume_identity},
        {"noise.entropy-spectrum-mean", "entropy spectrum mean", Tier::Full, true, 23, 60.0, entropy_spectrum_mean},
        {"noise.stun-translation", "stun translation invariance", Tier::Fast, true, 24, 1.0, stun_translation},
        {"noise.log-det-drift", "log-determinant drift decreases", Tier::Fast, false, 0, 5.0, log_det_drift},
        {"pointprocess.matern-hard-core", "Matern thinning hard core", Tier::Fast, true, 31, 5.0, matern_hard_core},
        {"pointprocess.matern-stun", "stun thinning equals Matern thinning", Tier::Fast, true, 32, 5.0, matern_stun_equivalence},
        {"pointprocess.typical-ball-void", "typical ball void probability", Tier::Fast, true, 33, 10.0, typical_ball_void},
        {"pointprocess.void-probability", "Poisson void probability", Tier::Fast, true, 34, 10.0, poisson_void_probability},
        {"decoding.ball-vs-stun", "Gaussian ball test equals stun rule", Tier::Fast, true, 41, 5.0, gaussian_ball_matches_stun},
        {"decoding.flat-colored", "flat Mahalanobis rule equals Euclidean rule", Tier::Fast, true, 42, 5.0,
         flat_mahalanobis_matches_euclid},
        {"decoding.monotonicity", "removing interferers keeps success", Tier::Fast, true, 43, 5.0, removal_monotonicity},
        {"decoding.no-ambiguity", "no ambiguous outcomes for densities", Tier::Full, true, 44, 60.0, no_ambiguity},
        {"exact.two-dim-oracle", "n=2 closed-form oracle", Tier::Fast, false, 0, 1.0, two_dimensional_oracle},
        {"exact.derivative", "finite differences match dps_dlambda", Tier::Fast, false, 0, 5.0, derivative_consistency},
        {"exact.capacity-dichotomy", "capacity dichotomy at n=200", Tier::Fast, false, 0, 5.0, capacity_dichotomy_wgn},
        {"exact.typicality-decay", "typicality bound decays", Tier::Fast, false, 0, 5.0, typicality_decay_wgn},
        {"exact.matern-cutoff", "Matern integrand vanishes below half the exclusion", Tier::Fast, false, 0, 1.0,
         matern_integrand_cutoff},
        {"exponents.continuity", "branch continuity", Tier::Fast, false, 0, 1.0, branch_continuity},
        {"exponents.numeric-inf", "numeric infimum matches closed forms", Tier::Fast, false, 0, 5.0, numeric_matches_closed_form},
        {"exponents.colored", "AR1 exponent equals the WGN exponent", Tier::Fast, false, 0, 10.0, colored_exponent_reduction},
        {"exponents.poltyrev", "Poltyrev exponent combines the regimes", Tier::Fast, false, 0, 10.0, poltyrev_combines_regimes},
        {"exponents.monotone", "exponents nonnegative and nondecreasing", Tier::Fast, false, 0, 10.0, exponents_monotone},
        {"montecarlo.determinism", "bit-identical across thread counts", Tier::Fast, true, 61, 20.0, thread_determinism},
        {"montecarlo.ci-calibration", "95% interval coverage", Tier::Fast, true, 62, 10.0, interval_calibration},
        {"montecarlo.rao-blackwell", "reduced variance below explicit", Tier::Fast, true, 63, 20.0, rao_blackwell},
        {"montecarlo.grid", "grid Palm estimate matches closed form", Tier::Fast, true, 64, 20.0, grid_scenario},
        {"cli.rerun", "rerun reproduces output bytes", Tier::Fast, false, 0, 10.0, rerun_reproduces},
        {"cli.schema", "sidecar schema version and headers", Tier::Fast, false, 0, 10.0, sidecar_schema},
    };
}

inline constexpr double kFullTierBudgetSeconds = 600.0;

inline CheckReport run_check(const Check& c, std::optional<std::uint64_t> seed_override, unsigned threads) {
    const std::uint64_t seed = seed_override.value_or(c.default_seed);
    const auto start = std::chrono::steady_clock::now();
    CheckResult r{false, kNaN, kNaN, ""};
    try {
        r = c.run(CheckContext{seed, threads});
    } catch (const std::exception& e) {
        r.note = std::string("threw: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string note = r.note;
    const bool in_budget = secs <= c.budget_seconds;
    if (!in_budget) note += (note.empty() ? "" : "; ") + std::string("over runtime budget");
    return {c.id,       c.title,   c.tier,    c.stochastic ? std::optional<std::uint64_t>(seed) : std::nullopt,
            r.pass && in_budget, r.measured, r.tolerance, secs, c.budget_seconds, note};
}

// Runs the suite for a tier. The fast tier skips checks marked full; the full
// tier also reports AC13, which aggregates every module invariant.
inline std::vector<CheckReport> run_checks(Tier tier, std::optional<std::uint64_t> seed_override, unsigned threads,
                                           const std::function<void(const CheckReport&)>& on_report = {}) {
    std::vector<CheckReport> out;
    auto emit = [&](CheckReport r) {
        if (on_report) on_report(r);
        out.push_back(std::move(r));
    };
    double total = 0.0;
    for (const auto& c : acceptance_checks()) {
        if (tier == Tier::Fast && c.tier == Tier::Full) continue;
        emit(run_check(c, seed_override, threads));
        total += out.back().seconds;
    }
    int failed = 0, ran = 0;
    double property_seconds = 0.0;
    for (const auto& c : property_checks()) {
        if (tier == Tier::Fast && c.tier == Tier::Full) continue;
        emit(run_check(c, seed_override, threads));
        ++ran;
        failed += out.back().pass ? 0 : 1;
        property_seconds += out.back().seconds;
    }
    total += property_seconds;
    if (tier == Tier::Full) {
        const bool in_budget = total <= kFullTierBudgetSeconds;
        emit({"AC13",
              "module property suites under the full tier",
              Tier::Full,
              std::nullopt,
              failed == 0 && in_budget,
              static_cast<double>(failed),
              0.0,
              property_seconds,
              kFullTierBudgetSeconds,
              std::to_string(ran) + " property checks, " + std::to_string(failed) + " failed; full tier total " +
                  detail::fmt(total) + " s"});
    }
    return out;
}

inline std::string format_report_line(const CheckReport& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-4s %-34s measured=%-12.6g tol=%-10.4g %7.2fs/%-5.0fs seed=%s", r.pass ? "PASS" : "FAIL",
                  r.id.c_str(), r.measured, r.tolerance, r.seconds, r.budget_seconds,
                  r.seed ? std::to_string(*r.seed).c_str() : "-");
    std::string line = buf;
    line += "  " + r.title;
    if (!r.note.empty()) line += " [" + r.note + "]";
    return line;
}

inline void write_report_csv(std::ostream& os, const std::vector<CheckReport>& reports) {
    Table t;
    t.columns = {"id", "title", "tier", "status", "measured", "tolerance", "seconds", "budget_seconds", "seed", "note"};
    for (const auto& r : reports) {
        t.rows.push_back({r.id, r.title, std::string(tier_name(r.tier)), std::string(r.pass ? "pass" : "fail"), r.measured,
                          r.tolerance, r.seconds, r.budget_seconds,
                          r.seed ? Cell(static_cast<std::int64_t>(*r.seed)) : Cell(std::string("-")), r.note});
    }
    write_csv(os, t);
}

} // namespace palmexp
