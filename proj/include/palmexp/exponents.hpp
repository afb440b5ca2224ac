#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "errors.hpp"
#include "geometry.hpp"
#include "noise.hpp"
#include "special.hpp"

namespace palmexp {

enum class ExponentMethod { ClosedForm, NumericInf };

inline const char* method_name(ExponentMethod m) {
    return m == ExponentMethod::ClosedForm ? "closed_form" : "numeric_inf";
}

struct ExponentResult {
    double alpha;
    double exponent;
    // u* for the Poisson infimum over noise levels, v* for radius-based problems.
    double minimizer;
    std::string branch;
    ExponentMethod method;
};

enum class CurveAxis { Alpha, ShannonRate };

struct CurveRow {
    double x;
    double exponent;
    double minimizer;
    std::string branch;
    double alpha;
};

struct ExponentCurve {
    CurveAxis axis;
    std::vector<CurveRow> rows;
    std::size_t dropped = 0;
};

enum class CodebookKind { Poisson, Matern };

inline constexpr double kClosedFormTolerance = 1e-6;
inline constexpr double kMaternClosedFormTolerance = 1e-4;
// Width of the noise-level range searched above the rate-function threshold.
inline constexpr double kLevelSearchWidth = 20.0;
inline constexpr int kLevelGridPoints = 200;

namespace branches {

inline double poisson_wgn_low(double alpha) { return 0.5 * alpha * alpha - 0.5 - std::log(alpha); }
inline double poisson_wgn_high(double alpha) { return 0.5 - kLn2 + std::log(alpha); }
inline double poisson_symexp_low(double alpha) { return alpha - 1.0 - std::log(alpha); }
inline double poisson_symexp_high(double alpha) { return 1.0 - 2.0 * kLn2 + std::log(alpha); }
inline double matern_wgn_quadratic(double alpha) { return alpha * alpha / 8.0; }
inline double matern_symexp_low(double alpha) { return alpha - std::log(alpha) - 1.0; }
inline double matern_symexp_mid(double alpha) { return std::log(alpha) + 1.0 - 2.0 * kLn2; }
inline double matern_symexp_high(double alpha) { return alpha / 2.0 - std::log(alpha) - 1.0 + 2.0 * kLn2; }

// Noise term of the Gaussian radial problem.
inline double wgn_noise_cost(double v) { return 0.5 * v * v - 0.5 - std::log(v); }
// Noise term of the symmetric exponential radial problem.
inline double symexp_noise_cost(double v) { return v - std::log(v) - 1.0; }

// Cost of having a Matern point in the lune at normalised radius v, with
// intensity set by alpha and exclusion radius set by alpha_excl.
inline double matern_wgn_ball_cost(double v, double alpha, double alpha_excl) {
    if (v <= alpha_excl / 2.0) return kInf;
    if (v < alpha_excl / kSqrt2) return std::log(alpha) - std::log(lune_middle_radius(v, alpha_excl));
    return positive_part(std::log(alpha) - std::log(v));
}

inline double matern_symexp_ball_cost(double v, double alpha_excl) {
    if (v <= alpha_excl / 2.0) return kInf;
    return positive_part(std::log(alpha_excl) - std::log(v));
}

} // namespace branches

namespace detail {

inline void require_alpha(double alpha) {
    if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw DomainError("alpha must be finite and >= 1");
}

// Minimum of f on (lo, hi]: grid scan, then Brent refinement around the best point.
inline std::pair<double, double> scan_minimize(const std::function<double(double)>& f, double lo, double hi, int points) {
    std::vector<double> xs(static_cast<std::size_t>(points));
    double best = kInf;
    std::size_t arg = 0;
    for (int i = 0; i < points; ++i) {
        xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * (i + 1) / points;
        const double v = f(xs[static_cast<std::size_t>(i)]);
        if (v < best) {
            best = v;
            arg = static_cast<std::size_t>(i);
        }
    }
    if (best == kInf) throw NumericalError("objective is infinite on the whole search range");
    const double a = arg == 0 ? lo : xs[arg - 1];
    const double b = arg + 1 == xs.size() ? hi : xs[arg + 1];
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::brent_find_minima(f, a, b, 52, iters);
    if (r.second < best) return {r.first, r.second};
    return {xs[arg], best};
}

inline void cross_check(const char* what, double alpha, double numeric, double closed, double tol) {
    if (!(std::abs(numeric - closed) <= tol)) {
        std::ostringstream os;
        os.precision(12);
        os << what << " at alpha=" << alpha << ": numeric " << numeric << " vs closed form " << closed;
        throw ConsistencyError(os.str());
    }
}

} // namespace detail

// Growth rate of the stun sublevel volume: J(u) = sup_{s <= u} (s - I(s)).
inline double volume_exponent_J(const NoiseModel& m, double u) {
    if (std::holds_alternative<MarkovGaussianAR1>(m)) detail::unsupported("volume exponent", "markov-ar1");
    const double h = entropy_rate(m);
    const double t = rate_threshold(m);
    if (std::holds_alternative<WhiteUniform>(m)) return u >= t ? t : kNegInf;
    if (!(u > t)) return kNegInf;
    if (std::holds_alternative<WhiteSymExp>(m)) return h + std::log(u - t);
    return h + 0.5 * std::log(2.0 * (u - t));
}

// The same supremum computed directly from the rate function.
inline double volume_exponent_J_numeric(const NoiseModel& m, double u) {
    const double t = rate_threshold(m);
    auto gain = [&](double s) { return s - rate_function(m, s); };
    if (std::holds_alternative<WhiteUniform>(m)) {
        const double h = entropy_rate(m);
        return u >= h ? gain(h) : kNegInf;
    }
    if (!(u > t)) return kNegInf;
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::brent_find_minima([&](double s) { return -gain(s); }, t, u, 52, iters);
    return std::max(-r.second, gain(u));
}

// inf_u { (ln alpha + h - J(u))^+ + I(u) } by grid scan and refinement.
inline ExponentResult poisson_exponent_numeric(const NoiseModel& m, double alpha) {
    detail::require_alpha(alpha);
    const double h = entropy_rate(m);
    const double log_alpha = std::log(alpha);
    auto objective = [&](double u) {
        const double i = rate_function(m, u);
        if (i == kInf) return kInf;
        return positive_part(log_alpha + (h - volume_exponent_J(m, u))) + i;
    };
    if (std::holds_alternative<WhiteUniform>(m))
        return {alpha, objective(h), h, "uniform-point-mass", ExponentMethod::NumericInf};
    const double t = rate_threshold(m);
    const auto [u, value] = detail::scan_minimize(objective, t, t + kLevelSearchWidth, kLevelGridPoints);
    return {alpha, value, u, "numeric", ExponentMethod::NumericInf};
}

// Poisson codebook exponent under MLE decoding. Closed forms are returned when
// known, after checking them against the numeric infimum.
inline ExponentResult poisson_exponent(const NoiseModel& m, double alpha) {
    const ExponentResult numeric = poisson_exponent_numeric(m, alpha);
    const double t = rate_threshold(m);
    if (std::holds_alternative<WhiteGaussian>(m) || std::holds_alternative<ColoredGaussian>(m)) {
        const bool low = alpha < std::sqrt(2.0);
        const double v = low ? alpha : std::sqrt(2.0);
        const double closed = low ? branches::poisson_wgn_low(alpha) : branches::poisson_wgn_high(alpha);
        detail::cross_check("Gaussian Poisson exponent", alpha, numeric.exponent, closed, kClosedFormTolerance);
        return {alpha, closed, t + 0.5 * v * v, low ? "poisson-gaussian-low" : "poisson-gaussian-high",
                ExponentMethod::ClosedForm};
    }
    if (std::holds_alternative<WhiteSymExp>(m)) {
        const bool low = alpha < 2.0;
        const double v = low ? alpha : 2.0;
        const double closed = low ? branches::poisson_symexp_low(alpha) : branches::poisson_symexp_high(alpha);
        detail::cross_check("symexp Poisson exponent", alpha, numeric.exponent, closed, kClosedFormTolerance);
        return {alpha, closed, t + v, low ? "poisson-symexp-low" : "poisson-symexp-high", ExponentMethod::ClosedForm};
    }
    if (std::holds_alternative<WhiteUniform>(m)) {
        const double closed = std::log(alpha);
        detail::cross_check("uniform Poisson exponent", alpha, numeric.exponent, closed, kClosedFormTolerance);
        return {alpha, closed, numeric.minimizer, "poisson-uniform", ExponentMethod::ClosedForm};
    }
    return numeric;
}

// min over v of noise cost plus Matern ball cost, with the exclusion radius at alpha.
inline ExponentResult matern_exponent_numeric(const NoiseModel& m, double alpha) {
    detail::require_alpha(alpha);
    std::function<double(double)> objective;
    if (std::holds_alternative<WhiteGaussian>(m)) {
        objective = [alpha](double v) {
            return branches::wgn_noise_cost(v) + branches::matern_wgn_ball_cost(v, alpha, alpha);
        };
    } else if (std::holds_alternative<WhiteSymExp>(m)) {
        objective = [alpha](double v) {
            return branches::symexp_noise_cost(v) + branches::matern_symexp_ball_cost(v, alpha);
        };
    } else {
        throw UnsupportedOperation("Matern exponent needs wgn or symexp noise, got " + model_name(m));
    }
    const double lo = alpha / 2.0;
    const double hi = std::max(alpha, 2.0) + kLevelSearchWidth;
    // Kinks sit at the branch boundaries, so each piece is refined separately.
    std::vector<double> cuts{lo, alpha / kSqrt2, alpha, hi};
    std::sort(cuts.begin(), cuts.end());
    double best = kInf, arg = lo;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (!(cuts[i + 1] > cuts[i])) continue;
        const auto [v, value] = detail::scan_minimize(objective, cuts[i], cuts[i + 1], 400);
        const double edge = objective(cuts[i + 1]);
        if (value < best) best = value, arg = v;
        if (edge < best) best = edge, arg = cuts[i + 1];
    }
    return {alpha, best, arg, "numeric", ExponentMethod::NumericInf};
}

// Matern codebook exponent under MLE decoding, in the limit of vanishing slack.
inline ExponentResult matern_exponent(const NoiseModel& m, double alpha) {
    const ExponentResult numeric = matern_exponent_numeric(m, alpha);
    if (std::holds_alternative<WhiteGaussian>(m)) {
        if (alpha >= 2.0) {
            const double closed = branches::matern_wgn_quadratic(alpha);
            detail::cross_check("wgn Matern exponent", alpha, numeric.exponent, closed, kMaternClosedFormTolerance);
            return {alpha, closed, std::sqrt(1.0 + alpha * alpha / 4.0), "matern-wgn-quadratic", ExponentMethod::ClosedForm};
        }
        // Below 2 the minimiser lies outside the lune region and the Poisson value is recovered.
        const bool low = alpha < std::sqrt(2.0);
        const double closed = low ? branches::poisson_wgn_low(alpha) : branches::poisson_wgn_high(alpha);
        detail::cross_check("wgn Matern exponent", alpha, numeric.exponent, closed, kMaternClosedFormTolerance);
        return {alpha, closed, low ? alpha : std::sqrt(2.0), low ? "matern-wgn-low" : "matern-wgn-high",
                ExponentMethod::ClosedForm};
    }
    double closed = 0.0, v = 0.0;
    std::string branch;
    if (alpha <= 2.0) {
        closed = branches::matern_symexp_low(alpha), v = alpha, branch = "matern-symexp-low";
    } else if (alpha <= 4.0) {
        closed = branches::matern_symexp_mid(alpha), v = 2.0, branch = "matern-symexp-mid";
    } else {
        closed = branches::matern_symexp_high(alpha), v = alpha / 2.0, branch = "matern-symexp-high";
    }
    detail::cross_check("symexp Matern exponent", alpha, numeric.exponent, closed, kMaternClosedFormTolerance);
    return {alpha, closed, v, branch, ExponentMethod::ClosedForm};
}

// The three-branch Poltyrev exponent for white Gaussian noise.
inline ExponentResult poltyrev_exponent(double alpha) {
    detail::require_alpha(alpha);
    if (alpha < std::sqrt(2.0))
        return {alpha, branches::poisson_wgn_low(alpha), alpha, "random-coding-low", ExponentMethod::ClosedForm};
    if (alpha < 2.0)
        return {alpha, branches::poisson_wgn_high(alpha), std::sqrt(2.0), "random-coding-high", ExponentMethod::ClosedForm};
    return {alpha, branches::matern_wgn_quadratic(alpha), std::sqrt(1.0 + alpha * alpha / 4.0), "expurgated",
            ExponentMethod::ClosedForm};
}

inline ExponentResult codebook_exponent(const NoiseModel& m, double alpha, CodebookKind codebook) {
    return codebook == CodebookKind::Poisson ? poisson_exponent(m, alpha) : matern_exponent(m, alpha);
}

inline ExponentCurve exponent_curve(const NoiseModel& m, std::span<const double> alphas, CodebookKind codebook) {
    ExponentCurve curve{CurveAxis::Alpha, {}, 0};
    for (double a : alphas) {
        const auto r = codebook_exponent(m, a, codebook);
        curve.rows.push_back({a, r.exponent, r.minimizer, r.branch, a});
    }
    std::stable_sort(curve.rows.begin(), curve.rows.end(), [](const CurveRow& x, const CurveRow& y) { return x.x < y.x; });
    return curve;
}

struct CapacityBounds {
    double lower;
    double upper;
};

// Bounds on the capacity of the power-constrained additive noise channel.
inline CapacityBounds shannon_capacity_bounds(const NoiseModel& m, double power) {
    if (!(power > 0.0) || !std::isfinite(power)) throw DomainError("power must be finite and positive");
    const double h = entropy_rate(m);
    const double var = noise_variance(m);
    const double base = 0.5 * std::log(2.0 * kPi * std::exp(1.0));
    return {base + 0.5 * std::log(power) - h, base + 0.5 * std::log(power + var) - h};
}

enum class RateForm {
    // R = (1/2) ln(2 pi e P) - h - ln alpha
    EntropyPower,
    // R = (1/2) ln((1 + A^2) / alpha^2), white Gaussian noise only
    AwgnSnr,
};

// Rate versus exponent lower bound. Rows with nonpositive rate are dropped and counted.
inline ExponentCurve shannon_exponent_curve(const NoiseModel& m, double power_or_snr, std::span<const double> alphas,
                                            CodebookKind codebook, RateForm form = RateForm::EntropyPower) {
    if (!(power_or_snr > 0.0) || !std::isfinite(power_or_snr)) throw DomainError("P or A must be finite and positive");
    if (form == RateForm::AwgnSnr && !std::holds_alternative<WhiteGaussian>(m))
        throw UnsupportedOperation("the SNR rate form needs white Gaussian noise, got " + model_name(m));
    ExponentCurve curve{CurveAxis::ShannonRate, {}, 0};
    for (double a : alphas) {
        detail::require_alpha(a);
        const double rate = form == RateForm::AwgnSnr
                                ? 0.5 * std::log((1.0 + power_or_snr * power_or_snr) / (a * a))
                                : 0.5 * std::log(2.0 * kPi * std::exp(1.0) * power_or_snr) - entropy_rate(m) - std::log(a);
        if (!(rate > 0.0)) {
            ++curve.dropped;
            continue;
        }
        const auto r = codebook_exponent(m, a, codebook);
        curve.rows.push_back({rate, r.exponent, r.minimizer, r.branch, a});
    }
    std::stable_sort(curve.rows.begin(), curve.rows.end(), [](const CurveRow& x, const CurveRow& y) { return x.x < y.x; });
    return curve;
}

} // namespace palmexp
