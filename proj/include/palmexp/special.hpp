#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace palmexp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLn2 = 0.69314718055994530942;
inline constexpr double kLnPi = 1.14472988584940017414;
inline constexpr double kLn2Pi = 1.83787706640934548356;
inline constexpr double kSqrt2 = 1.41421356237309504880;

inline double log_gamma(double x) { return boost::math::lgamma(x); }

// Natural log of a linear-domain value; exp() is the inverse helper.
inline double exp_log(double log_value) { return std::exp(log_value); }

inline double log_add_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

// log(1 - e^x) for x <= 0.
inline double log1m_exp(double x) {
    if (x > 0.0) return std::numeric_limits<double>::quiet_NaN();
    if (x == 0.0) return kNegInf;
    if (x > -kLn2) return std::log(-std::expm1(x));
    return std::log1p(-std::exp(x));
}

// log(e^a - e^b) for a >= b. Differences below 1e-14 are reported as -inf.
inline double log_diff_exp(double a, double b) {
    if (b == kNegInf) return a;
    if (a == kNegInf || a - b < 1e-14) return kNegInf;
    return a + log1m_exp(b - a);
}

// log(1 - e^{-x}) given log x.
inline double log_one_minus_exp_neg(double log_x) {
    if (log_x == kNegInf) return kNegInf;
    if (log_x < -20.0) {
        const double x = std::exp(log_x);
        return log_x - 0.5 * x + x * x / 24.0;
    }
    const double x = std::exp(log_x);
    if (x > 745.0) return 0.0;
    return log1m_exp(-x);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

inline double positive_part(double x) { return x > 0.0 ? x : 0.0; }

} // namespace palmexp
