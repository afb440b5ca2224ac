#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <variant>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "errors.hpp"
#include "geometry.hpp"
#include "noise.hpp"
#include "quadrature.hpp"
#include "special.hpp"
#include "trials.hpp"

namespace palmexp {

struct LogProbability {
    double log_pe;
    double log_ps;
    int n;
    double alpha;
    double log_lambda;
};

// ln lambda_n for a codebook at distance alpha from the Poltyrev capacity.
inline double poisson_log_intensity(const NoiseModel& m, int n, double alpha) {
    if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
    return -n * (entropy_rate(m) + std::log(alpha));
}

namespace detail {

inline void require_n(int n) {
    if (n < 1) throw DomainError("n must be >= 1");
}

// Upper end of the standardised radial integration range.
inline double radial_upper(int n) { return 4.0 * std::sqrt(static_cast<double>(n)) + 40.0; }

// ln of the factor mapping the unit-variance ball volume to the model's
// decoding-region volume: n ln sigma for white noise, (1/2) ln det for cgn.
inline double gaussian_volume_scale(const NoiseModel& m, int n) {
    if (const auto* w = std::get_if<WhiteGaussian>(&m)) return n * std::log(w->sigma);
    if (const auto* c = std::get_if<ColoredGaussian>(&m)) return 0.5 * c->log_det(n);
    throw UnsupportedOperation("Poisson MLE quadrature needs white or colored Gaussian noise, got " + model_name(m));
}

inline double log_gamma_p(double a, double x) {
    if (x <= 0.0) return kNegInf;
    const double p = boost::math::gamma_p(a, x);
    return p > 0.0 ? std::log(p) : kNegInf;
}

inline double log_gamma_q(double a, double x) {
    if (x <= 0.0) return 0.0;
    const double q = boost::math::gamma_q(a, x);
    return q > 0.0 ? std::log(q) : kNegInf;
}

// Zero of an increasing function on [lo, hi], if it changes sign there.
template <class F>
std::optional<double> increasing_root(F&& f, double lo, double hi) {
    if (!(f(lo) < 0.0) || !(f(hi) > 0.0)) return std::nullopt;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

// Error and success probabilities of MLE decoding for a Poisson codebook of
// intensity e^{log_lambda} under Gaussian noise.
inline LogProbability poisson_log_probability(const NoiseModel& m, int n, double log_lambda) {
    detail::require_n(n);
    const double scale = detail::gaussian_volume_scale(m, n);
    const double hi = detail::radial_upper(n);
    if (log_lambda == kNegInf) return {kNegInf, 0.0, n, kInf, log_lambda};
    auto log_load = [&](double r) { return log_lambda + scale + log_ball_volume(n, r); };
    const double log_pe = log_integrate(
        [&](double r) {
            if (r <= 0.0) return kNegInf;
            return chi_density_log(n, 1.0, r) + log_one_minus_exp_neg(log_load(r));
        },
        0.0, hi);
    const double log_ps = log_integrate(
        [&](double r) {
            if (r <= 0.0) return kNegInf;
            return chi_density_log(n, 1.0, r) - std::exp(log_load(r));
        },
        0.0, hi);
    return {log_pe, log_ps, n, kNaN, log_lambda};
}

inline LogProbability poisson_mle_log_pe(const NoiseModel& m, int n, double alpha) {
    auto out = poisson_log_probability(m, n, poisson_log_intensity(m, n, alpha));
    out.alpha = alpha;
    return out;
}

namespace detail {

// Integrand of the Matern bound over the normalised noise radius v:
// min(1, lambda |lune(v)|) times the density of v.
struct MaternBoundIntegrand {
    bool gaussian;
    int n;
    double log_lambda;
    double alpha_excl;
    double sigma;
    double upper;

    double load(double v) const {
        if (gaussian) {
            const double c = matern_lune_radius(v, alpha_excl);
            return c == 0.0 ? kNegInf : log_lambda + log_ball_volume(n, c * sigma * std::sqrt(static_cast<double>(n)));
        }
        return log_lambda + l1_lune_log_volume_bounds(n, v, alpha_excl, sigma).upper;
    }

    double operator()(double v) const {
        if (v <= 0.0) return kNegInf;
        const double l = load(v);
        if (l == kNegInf) return kNegInf;
        const double sn = std::sqrt(static_cast<double>(n));
        if (gaussian) return std::min(0.0, l) + chi_density_log(n, 1.0, v * sn) + std::log(sn);
        const double scale = n * sigma / kSqrt2;
        return std::min(0.0, l) + gamma_l1_density_log(n, sigma, v * scale) + std::log(scale);
    }
};

inline MaternBoundIntegrand matern_bound_integrand(const NoiseModel& m, int n, double alpha, double epsilon) {
    require_n(n);
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
    const double at = alpha - epsilon;
    if (!(at > 1.0)) throw DomainError("Matern bound needs alpha - epsilon > 1");
    const double log_lambda = poisson_log_intensity(m, n, alpha);
    if (const auto* w = std::get_if<WhiteGaussian>(&m))
        return {true, n, log_lambda, at, w->sigma, radial_upper(n) / std::sqrt(static_cast<double>(n))};
    if (const auto* s = std::get_if<WhiteSymExp>(&m)) return {false, n, log_lambda, at, s->sigma, 4.0 + 100.0 / n};
    throw UnsupportedOperation("Matern bound needs wgn or symexp noise, got " + model_name(m));
}

} // namespace detail

// ln of the Matern bound integrand at normalised noise radius v.
inline double matern_bound_log_integrand(const NoiseModel& m, int n, double alpha, double epsilon, double v) {
    return detail::matern_bound_integrand(m, n, alpha, epsilon)(v);
}

// Upper bound on the MLE error probability of the Matern codebook with
// exclusion radius (alpha - epsilon) sigma sqrt(n) (L1 analogue for symexp).
inline double matern_mle_log_pe_bound(const NoiseModel& m, int n, double alpha, double epsilon) {
    const auto f = detail::matern_bound_integrand(m, n, alpha, epsilon);
    const double at = f.alpha_excl;
    std::vector<double> breaks{at / 2.0};
    if (f.gaussian) breaks.push_back(at / kSqrt2);
    // Kink where the expected lune count crosses one.
    if (auto k = detail::increasing_root([&](double v) { return f.load(v); }, at / 2.0, f.upper)) breaks.push_back(*k);
    return log_integrate(f, 0.0, f.upper, breaks);
}

// ln of P(D not typical) + 1 - exp(-lambda |A_delta|) with lambda = e^{nR}.
inline double typicality_log_pe_bound(const NoiseModel& m, int n, double R, double delta) {
    detail::require_n(n);
    if (!is_white(m)) throw UnsupportedOperation("typicality bound needs white noise, got " + model_name(m));
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
    double log_atypical = kNegInf;
    if (std::holds_alternative<WhiteGaussian>(m)) {
        const double a = 0.5 * n;
        log_atypical = log_add_exp(detail::log_gamma_p(a, a * (1.0 - 2.0 * delta)), detail::log_gamma_q(a, a * (1.0 + 2.0 * delta)));
    } else if (std::holds_alternative<WhiteSymExp>(m)) {
        const double a = n;
        log_atypical = log_add_exp(detail::log_gamma_p(a, a * (1.0 - delta)), detail::log_gamma_q(a, a * (1.0 + delta)));
    }
    const double log_cover = log_one_minus_exp_neg(n * R + typicality_log_volume(m, n, delta));
    return log_add_exp(log_atypical, log_cover);
}

// Monte Carlo bound for a decoder designed for `design` facing `actual` noise.
inline Estimate mismatched_pe_bound(const NoiseModel& design, const NoiseModel& actual, int n, double alpha,
                                    const RunOptions& opt) {
    detail::require_n(n);
    if (!has_level_volume(design)) throw UnsupportedOperation("mismatched bound needs a design model with closed-form level volumes");
    const double log_lambda = poisson_log_intensity(design, n, alpha);
    RunOptions o = opt;
    o.error = ErrorModel::Empirical;
    return run_trials(o, [&, n](Stream& s, std::uint64_t) {
        std::vector<double> d(static_cast<std::size_t>(n));
        sample_into(actual, d, s);
        const double u = -log_density(design, d) / n;
        const double log_w = stun_level_log_volume(design, n, u);
        return TrialOutcome{std::exp(log_one_minus_exp_neg(log_lambda + log_w))};
    });
}

// ln P(success) for the cubic grid of spacing e^{-R} under white Gaussian noise.
inline double grid_log_ps(int n, double R, double sigma) {
    detail::require_n(n);
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    const double half = std::exp(-R) / (2.0 * sigma);
    return n * std::log(std::erf(half / kSqrt2));
}

// d p_s / d lambda for the Poisson codebook under white Gaussian noise.
inline double dps_dlambda(int n, double lambda, double sigma) {
    detail::require_n(n);
    if (!(lambda >= 0.0)) throw DomainError("lambda must be nonnegative");
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    const double scale = n * std::log(sigma);
    const double li = log_integrate(
        [&](double r) {
            if (r <= 0.0) return kNegInf;
            const double lv = scale + log_ball_volume(n, r);
            return lv - lambda * std::exp(lv) + chi_density_log(n, 1.0, r);
        },
        0.0, detail::radial_upper(n));
    return -std::exp(li);
}

// Probability that the white Gaussian typical set lies inside the Voronoi cell
// of the origin, for a Poisson codebook at distance alpha from capacity.
inline double coverage_prob_typ_in_voronoi(int n, double alpha, double delta, double sigma) {
    detail::require_n(n);
    const double log_lambda = poisson_log_intensity(WhiteGaussian(sigma), n, alpha);
    const double radius = 2.0 * std::sqrt(static_cast<double>(n)) * sigma * std::sqrt(1.0 + 2.0 * delta);
    return std::exp(-std::exp(log_lambda + log_ball_volume(n, radius)));
}

} // namespace palmexp
