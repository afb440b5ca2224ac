#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>

#include "errors.hpp"
#include "special.hpp"

namespace palmexp {

// Natural log of a volume in R^n; -inf encodes volume zero.
using LogVolume = double;

enum class Norm { L1, L2 };

struct LogVolumeBounds {
    LogVolume lower;
    LogVolume upper;
};

namespace detail {
inline void require_dimension(int n) {
    if (n < 1) throw DomainError("dimension must be >= 1, got " + std::to_string(n));
}
} // namespace detail

inline LogVolume log_ball_volume(int n, double r, Norm norm = Norm::L2) {
    detail::require_dimension(n);
    if (!(r >= 0.0)) throw DomainError("ball radius must be nonnegative");
    if (r == 0.0) return kNegInf;
    if (norm == Norm::L2) return n * std::log(r) + 0.5 * n * kLnPi - log_gamma(0.5 * n + 1.0);
    return n * std::log(2.0 * r) - log_gamma(n + 1.0);
}

// Ellipsoid {x : sum (x_i / s_i)^2 < r^2} with axis scales s_i.
inline LogVolume log_ellipsoid_volume(int n, double r, std::span<const double> axis_scales) {
    detail::require_dimension(n);
    if (axis_scales.size() != static_cast<std::size_t>(n))
        throw DomainError("ellipsoid needs exactly n axis scales");
    double log_det = 0.0;
    for (double s : axis_scales) {
        if (!(s > 0.0)) throw DomainError("ellipsoid axis scales must be positive");
        log_det += std::log(s);
    }
    return log_ball_volume(n, r) + log_det;
}

// Density of |D| for D ~ N(0, sigma^2 I_n).
inline double chi_density_log(int n, double sigma, double r) {
    detail::require_dimension(n);
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    if (!(r > 0.0)) return kNegInf;
    return -r * r / (2.0 * sigma * sigma) + (n - 1) * std::log(r) - n * std::log(sigma) -
           0.5 * n * kLn2 + kLn2 - log_gamma(0.5 * n);
}

// Density of |D|_1 for i.i.d. Laplace coordinates of variance sigma^2:
// a Gamma law with rate sqrt(2)/sigma and shape n.
inline double gamma_l1_density_log(int n, double sigma, double r) {
    detail::require_dimension(n);
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    if (!(r > 0.0)) return kNegInf;
    const double rate = kSqrt2 / sigma;
    return n * std::log(rate) + (n - 1) * std::log(r) - rate * r - log_gamma(n);
}

// Middle-branch formula sqrt(v^2 - (v - alpha_tilde^2 / (2v))^2), factored so
// that it vanishes exactly at v = alpha_tilde / 2.
inline double lune_middle_radius(double v, double alpha_tilde) {
    return alpha_tilde / (2.0 * v) * std::sqrt(std::max(0.0, (2.0 * v - alpha_tilde) * (2.0 * v + alpha_tilde)));
}

// Radius (in units of sigma*sqrt(n)) of the ball inscribed in the lune between
// B(x, |x|) and the complement of B(0, alpha_tilde), for |x| = v.
inline double matern_lune_radius(double v, double alpha_tilde) {
    if (!(v > 0.0)) throw DomainError("lune radius needs v > 0");
    if (v < 0.5 * alpha_tilde) return 0.0;
    if (v < alpha_tilde / kSqrt2) return lune_middle_radius(v, alpha_tilde);
    return v;
}

// Bounds on the log volume of the L1 lune for a Laplace noise vector of L1
// norm v*n*sigma/sqrt(2) and an exclusion radius alpha_tilde*n*sigma/sqrt(2).
inline LogVolumeBounds l1_lune_log_volume_bounds(int n, double v, double alpha_tilde, double sigma) {
    detail::require_dimension(n);
    if (!(v > 0.0)) throw DomainError("lune bounds need v > 0");
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    if (v <= 0.5 * alpha_tilde) return {kNegInf, kNegInf};
    const LogVolume upper = log_ball_volume(n, v * n * sigma / kSqrt2, Norm::L1);
    const double inner = std::max(alpha_tilde - v, 0.0);
    const double ratio_log = inner > 0.0 ? n * (std::log(inner) - std::log(v)) : kNegInf;
    const LogVolume lower = upper - kLn2 + log1m_exp(ratio_log);
    return {lower, upper};
}

} // namespace palmexp
