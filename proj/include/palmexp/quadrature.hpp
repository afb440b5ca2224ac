#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"
#include "special.hpp"

namespace palmexp {

struct LogQuadratureOptions {
    int scan_points = 2000;
    double rel_tol = 1e-12;
    double accept_rel_error = 1e-8;
    // Parts of the range more than this many nats below the peak are dropped.
    double drop_below_peak = 80.0;
    unsigned max_depth = 15;
};

// log ∫_lo^hi exp(log_f(x)) dx.
//
// The integrand is rescaled by its scanned peak so that integrals of order
// e^{-500} are computed without underflow. Known kinks go in `breaks`.
template <class LogF>
double log_integrate(LogF&& log_f, double lo, double hi, std::span<const double> breaks = {},
                     const LogQuadratureOptions& opt = {}) {
    if (!(hi > lo)) return kNegInf;
    std::vector<double> xs;
    xs.reserve(static_cast<std::size_t>(opt.scan_points) + 1 + breaks.size());
    for (int i = 0; i <= opt.scan_points; ++i) xs.push_back(lo + (hi - lo) * i / opt.scan_points);
    for (double b : breaks)
        if (b > lo && b < hi) xs.push_back(b);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    std::vector<double> vals(xs.size());
    double peak = kNegInf;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        vals[i] = log_f(xs[i]);
        if (std::isnan(vals[i]) || vals[i] == kInf) {
            std::ostringstream os;
            os << "log-integrand is " << vals[i] << " at x=" << xs[i];
            throw NumericalError(os.str());
        }
        if (vals[i] > peak) {
            peak = vals[i];
            arg = i;
        }
    }
    if (peak == kNegInf) return kNegInf;

    std::size_t first = xs.size(), last = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (vals[i] > peak - opt.drop_below_peak) {
            first = std::min(first, i);
            last = i;
        }
    }
    const double a = xs[first == 0 ? 0 : first - 1];
    const double b = xs[std::min(last + 1, xs.size() - 1)];

    std::vector<double> cuts{a};
    for (double br : breaks)
        if (br > a && br < b) cuts.push_back(br);
    if (xs[arg] > a && xs[arg] < b) cuts.push_back(xs[arg]);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    auto scaled = [&](double x) {
        const double v = log_f(x);
        return v == kNegInf ? 0.0 : std::exp(v - peak);
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    double total = 0.0, err_total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double err = 0.0;
        total += GK::integrate(scaled, cuts[i], cuts[i + 1], opt.max_depth, opt.rel_tol, &err);
        err_total += err;
    }
    if (!(total > 0.0)) return kNegInf;
    if (err_total > opt.accept_rel_error * total) {
        std::ostringstream os;
        os << "quadrature did not converge on [" << a << ", " << b << "]: estimate " << total
           << " (scaled by e^" << peak << "), error " << err_total;
        throw NumericalError(os.str());
    }
    return peak + std::log(total);
}

// Plain adaptive Gauss–Kronrod integral with an absolute-error report.
template <class F>
double integrate(F&& f, double lo, double hi, double rel_tol, double* error = nullptr) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    return GK::integrate(f, lo, hi, 20, rel_tol, error);
}

} // namespace palmexp
