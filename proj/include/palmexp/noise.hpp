#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "errors.hpp"
#include "geometry.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "special.hpp"

namespace palmexp {

struct WhiteGaussian {
    double sigma;
    explicit WhiteGaussian(double s = 1.0) : sigma(s) {
        if (!(s > 0.0)) throw DomainError("WhiteGaussian: sigma must be positive");
    }
};

// i.i.d. symmetric exponential (Laplace) coordinates with variance sigma^2.
struct WhiteSymExp {
    double sigma;
    explicit WhiteSymExp(double s = 1.0) : sigma(s) {
        if (!(s > 0.0)) throw DomainError("WhiteSymExp: sigma must be positive");
    }
};

// i.i.d. coordinates uniform on [-sqrt(3) sigma, sqrt(3) sigma].
struct WhiteUniform {
    double sigma;
    explicit WhiteUniform(double s = 1.0) : sigma(s) {
        if (!(s > 0.0)) throw DomainError("WhiteUniform: sigma must be positive");
    }
    double half_width() const { return std::sqrt(3.0) * sigma; }
};

// Stationary Gaussian AR(1) chain x_{i+1} = a x_i + sigma_eps z_i.
struct MarkovGaussianAR1 {
    double a;
    double sigma_eps;
    MarkovGaussianAR1(double a_, double sigma_eps_) : a(a_), sigma_eps(sigma_eps_) {
        if (!(std::abs(a_) < 1.0)) throw DomainError("MarkovGaussianAR1: |a| must be < 1");
        if (!(sigma_eps_ > 0.0)) throw DomainError("MarkovGaussianAR1: sigma_eps must be positive");
    }
    double stationary_variance() const { return sigma_eps * sigma_eps / (1.0 - a * a); }
};

// Stationary Gaussian process given by its spectral density g on [-pi, pi].
// Lags, the Cholesky factor of the largest Toeplitz covariance and the log
// determinants of every leading block are computed once at construction.
class ColoredGaussian {
public:
    using Spectrum = std::function<double(double)>;

    explicit ColoredGaussian(Spectrum g, int max_dim = 256, std::string label = "cgn")
        : cache_(build(std::move(g), max_dim, std::move(label))) {}

    static ColoredGaussian flat(double sigma, int max_dim = 256) {
        if (!(sigma > 0.0)) throw DomainError("flat spectrum needs sigma > 0");
        const double s2 = sigma * sigma;
        return ColoredGaussian([s2](double) { return s2; }, max_dim, "cgn-flat");
    }

    static ColoredGaussian ar1(double a, double sigma_eps, int max_dim = 256) {
        if (!(std::abs(a) < 1.0)) throw DomainError("AR1 spectrum needs |a| < 1");
        if (!(sigma_eps > 0.0)) throw DomainError("AR1 spectrum needs sigma_eps > 0");
        const double s2 = sigma_eps * sigma_eps;
        return ColoredGaussian(
            [a, s2](double b) { return s2 / (1.0 - 2.0 * a * std::cos(b) + a * a); }, max_dim,
            "cgn-ar1");
    }

    int max_dim() const { return cache_->max_dim; }
    const std::string& label() const { return cache_->label; }
    double spectral_density(double beta) const { return cache_->g(beta); }
    double lag(int k) const { return cache_->lags.at(static_cast<std::size_t>(std::abs(k))); }
    // (1/2pi) * integral of ln g over [-pi, pi].
    double spectral_log_integral() const { return cache_->spectral_log_integral; }

    double log_det(int n) const {
        require(n);
        return cache_->log_det[static_cast<std::size_t>(n)];
    }

    Eigen::MatrixXd covariance(int n) const {
        require(n);
        Eigen::MatrixXd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = cache_->lags[static_cast<std::size_t>(std::abs(i - j))];
        return m;
    }

    // Square roots of the eigenvalues of the n-dimensional covariance.
    std::vector<double> axis_scales(int n) const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance(n), Eigen::EigenvaluesOnly);
        std::vector<double> out(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::sqrt(es.eigenvalues()(i));
        return out;
    }

    // Upper bound on the largest axis scale of every covariance block.
    double max_axis_scale_bound() const { return cache_->max_scale_bound; }

    // x^T Gamma_n^{-1} x.
    double quadratic_form(std::span<const double> x) const {
        const int n = static_cast<int>(x.size());
        require(n);
        Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
        const Eigen::VectorXd w =
            cache_->chol.topLeftCorner(n, n).triangularView<Eigen::Lower>().solve(xv);
        return w.squaredNorm();
    }

    // In place: z (i.i.d. standard normal) becomes L_n z.
    void color(std::span<double> z) const {
        const int n = static_cast<int>(z.size());
        require(n);
        const auto& L = cache_->chol;
        for (int i = n - 1; i >= 0; --i) {
            double s = 0.0;
            for (int j = 0; j <= i; ++j) s += L(i, j) * z[static_cast<std::size_t>(j)];
            z[static_cast<std::size_t>(i)] = s;
        }
    }

    // Throws unless dimension n is within the covariance cache.
    void require(int n) const {
        if (n < 1) throw DomainError("dimension must be >= 1");
        if (n > cache_->max_dim) {
            std::ostringstream os;
            os << label() << ": dimension " << n << " exceeds the covariance cache size "
               << cache_->max_dim;
            throw ModelError(os.str());
        }
    }

private:
    struct Cache {
        Spectrum g;
        int max_dim = 0;
        std::string label;
        std::vector<double> lags;
        Eigen::MatrixXd chol;
        std::vector<double> log_det;
        double spectral_log_integral = 0.0;
        double max_scale_bound = 0.0;
    };

    static std::shared_ptr<const Cache> build(Spectrum g, int max_dim, std::string label) {
        if (max_dim < 1) throw DomainError("max_dim must be >= 1");
        auto c = std::make_shared<Cache>();
        c->g = std::move(g);
        c->max_dim = max_dim;
        c->label = std::move(label);

        const auto& gf = c->g;
        // Periodic trapezoid sums converge geometrically for smooth spectra; the
        // grid is refined until every lag is stable.
        auto trapezoid_lags = [&](std::size_t points) {
            std::vector<double> gs(points), out(static_cast<std::size_t>(max_dim), 0.0);
            const double step = 2.0 * kPi / static_cast<double>(points);
            for (std::size_t j = 0; j < points; ++j) gs[j] = gf(-kPi + step * static_cast<double>(j));
            for (int k = 0; k < max_dim; ++k) {
                double acc = 0.0;
                for (std::size_t j = 0; j < points; ++j) acc += std::cos(k * (-kPi + step * static_cast<double>(j))) * gs[j];
                out[static_cast<std::size_t>(k)] = acc / static_cast<double>(points);
            }
            return out;
        };
        std::size_t points = 1024;
        while (points < 4 * static_cast<std::size_t>(max_dim)) points *= 2;
        std::vector<double> lags = trapezoid_lags(points);
        for (;;) {
            if (points > (std::size_t{1} << 20))
                throw ModelError(c->label + ": covariance lag quadrature did not converge");
            points *= 2;
            std::vector<double> finer = trapezoid_lags(points);
            double diff = 0.0;
            for (std::size_t k = 0; k < finer.size(); ++k) diff = std::max(diff, std::abs(finer[k] - lags[k]));
            lags = std::move(finer);
            if (!std::isfinite(lags[0]) || !(lags[0] > 0.0))
                throw ModelError(c->label + ": spectral density has no positive finite variance");
            if (diff <= 1e-13 * lags[0]) break;
        }
        c->lags = std::move(lags);
        const double r0 = c->lags[0];

        bool bad_log = false;
        auto log_g = [&gf, &bad_log](double b) {
            const double v = gf(b);
            if (!(v > 0.0) || !std::isfinite(v)) {
                bad_log = true;
                return 0.0;
            }
            return std::log(v);
        };
        double err = 0.0;
        const double li = integrate(log_g, -kPi, kPi, 1e-13, &err);
        if (bad_log || !std::isfinite(li) || err > 1e-9 * std::max(1.0, std::abs(li)))
            throw ModelError(c->label + ": divergent spectral log-integral");
        c->spectral_log_integral = li / (2.0 * kPi);

        Eigen::MatrixXd gamma(max_dim, max_dim);
        for (int i = 0; i < max_dim; ++i)
            for (int j = 0; j < max_dim; ++j)
                gamma(i, j) = c->lags[static_cast<std::size_t>(std::abs(i - j))];
        Eigen::LLT<Eigen::MatrixXd> llt(gamma);
        if (llt.info() != Eigen::Success)
            throw ModelError(c->label + ": covariance is not positive definite");
        c->chol = llt.matrixL();
        c->log_det.assign(static_cast<std::size_t>(max_dim) + 1, 0.0);
        for (int i = 0; i < max_dim; ++i) {
            const double d = c->chol(i, i);
            if (!(d * d > 1e-12 * r0))
                throw ModelError(c->label + ": covariance is numerically singular at dimension " +
                                 std::to_string(i + 1));
            c->log_det[static_cast<std::size_t>(i) + 1] = c->log_det[static_cast<std::size_t>(i)] + 2.0 * std::log(d);
        }
        double row = r0;
        for (int k = 1; k < max_dim; ++k) row += 2.0 * std::abs(c->lags[static_cast<std::size_t>(k)]);
        c->max_scale_bound = std::sqrt(row);
        return c;
    }

    std::shared_ptr<const Cache> cache_;
};

using NoiseModel = std::variant<WhiteGaussian, WhiteSymExp, WhiteUniform, ColoredGaussian, MarkovGaussianAR1>;

struct EntropySpectrumSample {
    double u;
    int n;
};

namespace detail {
template <class T>
inline constexpr bool is_white_v = std::is_same_v<T, WhiteGaussian> || std::is_same_v<T, WhiteSymExp> ||
                                   std::is_same_v<T, WhiteUniform>;

inline double sum_sq(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}
inline double sum_abs(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += std::abs(v);
    return s;
}
[[noreturn]] inline void unsupported(std::string_view what, std::string_view model) {
    throw UnsupportedOperation(std::string(what) + " is not available for " + std::string(model));
}
} // namespace detail

// L1 radius of the symmetric exponential sublevel set at level u.
inline double symexp_l1_level_radius(int n, double sigma, double u) {
    const double excess = u - std::log(kSqrt2 * sigma);
    return excess > 0.0 ? n * sigma * excess / kSqrt2 : 0.0;
}

// L2 radius of the white Gaussian sublevel set at level u.
inline double wgn_level_radius(int n, double sigma, double u) {
    const double excess = u - (0.5 * kLn2Pi + std::log(sigma));
    return excess > 0.0 ? std::sqrt(2.0 * n * sigma * sigma * excess) : 0.0;
}

inline std::string model_name(const NoiseModel& m) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, WhiteGaussian>) return "wgn";
            else if constexpr (std::is_same_v<T, WhiteSymExp>) return "symexp";
            else if constexpr (std::is_same_v<T, WhiteUniform>) return "uniform";
            else if constexpr (std::is_same_v<T, ColoredGaussian>) return x.label();
            else return "markov-ar1";
        },
        m);
}

inline bool is_white(const NoiseModel& m) {
    return std::visit([](const auto& x) { return detail::is_white_v<std::decay_t<decltype(x)>>; }, m);
}

// Models whose stun sublevel volumes have closed forms.
inline bool has_level_volume(const NoiseModel& m) { return !std::holds_alternative<MarkovGaussianAR1>(m); }

inline double noise_variance(const NoiseModel& m) {
    return std::visit(
        [](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            if constexpr (detail::is_white_v<T>) return x.sigma * x.sigma;
            else if constexpr (std::is_same_v<T, ColoredGaussian>) return x.lag(0);
            else return x.stationary_variance();
        },
        m);
}

inline void sample_into(const NoiseModel& m, std::span<double> out, Stream& stream) {
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, WhiteGaussian>) {
                for (double& v : out) v = x.sigma * stream.normal();
            } else if constexpr (std::is_same_v<T, WhiteSymExp>) {
                for (double& v : out) v = stream.laplace(x.sigma / kSqrt2);
            } else if constexpr (std::is_same_v<T, WhiteUniform>) {
                const double w = x.half_width();
                for (double& v : out) v = stream.uniform(-w, w);
            } else if constexpr (std::is_same_v<T, ColoredGaussian>) {
                for (double& v : out) v = stream.normal();
                x.color(out);
            } else {
                if (out.empty()) return;
                out[0] = std::sqrt(x.stationary_variance()) * stream.normal();
                for (std::size_t i = 1; i < out.size(); ++i) out[i] = x.a * out[i - 1] + x.sigma_eps * stream.normal();
            }
        },
        m);
}

inline std::vector<double> sample(const NoiseModel& m, int n, Stream& stream) {
    if (n < 1) throw DomainError("sample: n must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(n));
    sample_into(m, out, stream);
    return out;
}

inline double log_density(const NoiseModel& m, std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, WhiteGaussian>) {
                const double s2 = p.sigma * p.sigma;
                return -0.5 * n * (kLn2Pi + std::log(s2)) - detail::sum_sq(x) / (2.0 * s2);
            } else if constexpr (std::is_same_v<T, WhiteSymExp>) {
                return -n * std::log(kSqrt2 * p.sigma) - kSqrt2 * detail::sum_abs(x) / p.sigma;
            } else if constexpr (std::is_same_v<T, WhiteUniform>) {
                const double w = p.half_width();
                for (double v : x)
                    if (std::abs(v) > w) return kNegInf;
                return -n * std::log(2.0 * w);
            } else if constexpr (std::is_same_v<T, ColoredGaussian>) {
                const int k = static_cast<int>(x.size());
                return -0.5 * n * kLn2Pi - 0.5 * p.log_det(k) - 0.5 * p.quadratic_form(x);
            } else {
                if (x.empty()) return 0.0;
                const double v0 = p.stationary_variance();
                const double se2 = p.sigma_eps * p.sigma_eps;
                double s = -0.5 * (kLn2Pi + std::log(v0)) - x[0] * x[0] / (2.0 * v0);
                for (std::size_t i = 1; i < x.size(); ++i) {
                    const double e = x[i] - p.a * x[i - 1];
                    s += -0.5 * (kLn2Pi + std::log(se2)) - e * e / (2.0 * se2);
                }
                return s;
            }
        },
        m);
}

// -(1/n) ln f^n(s - t).
inline double stun(const NoiseModel& m, std::span<const double> s, std::span<const double> t) {
    if (s.size() != t.size() || s.empty()) throw DomainError("stun: vectors must have equal positive length");
    std::vector<double> diff(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) diff[i] = s[i] - t[i];
    return -log_density(m, diff) / static_cast<double>(s.size());
}

inline double entropy_rate(const NoiseModel& m) {
    return std::visit(
        [](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, WhiteGaussian>) return 0.5 * (kLn2Pi + 1.0) + std::log(p.sigma);
            else if constexpr (std::is_same_v<T, WhiteSymExp>) return std::log(kSqrt2 * p.sigma) + 1.0;
            else if constexpr (std::is_same_v<T, WhiteUniform>) return std::log(2.0 * p.half_width());
            else if constexpr (std::is_same_v<T, ColoredGaussian>)
                return 0.5 * (kLn2Pi + 1.0) + 0.5 * p.spectral_log_integral();
            else return 0.5 * (kLn2Pi + 1.0) + std::log(p.sigma_eps);
        },
        m);
}

// Smallest level u at which the sublevel set {x : -(1/n) ln f(x) <= u} is
// non-empty in the large-n limit; the rate function is +inf at or below it.
inline double rate_threshold(const NoiseModel& m) {
    return std::visit(
        [](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, WhiteGaussian>) return 0.5 * kLn2Pi + std::log(p.sigma);
            else if constexpr (std::is_same_v<T, WhiteSymExp>) return std::log(kSqrt2 * p.sigma);
            else if constexpr (std::is_same_v<T, WhiteUniform>) return std::log(2.0 * p.half_width());
            else if constexpr (std::is_same_v<T, ColoredGaussian>)
                return 0.5 * kLn2Pi + 0.5 * p.spectral_log_integral();
            else detail::unsupported("rate_threshold", "markov-ar1");
        },
        m);
}

// ln |{x in R^n : -(1/n) ln f^n(x) <= u}|.
inline LogVolume stun_level_log_volume(const NoiseModel& m, int n, double u) {
    if (n < 1) throw DomainError("stun_level_log_volume: n must be >= 1");
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, WhiteGaussian>) {
                return log_ball_volume(n, wgn_level_radius(n, p.sigma, u));
            } else if constexpr (std::is_same_v<T, WhiteSymExp>) {
                return log_ball_volume(n, symexp_l1_level_radius(n, p.sigma, u), Norm::L1);
            } else if constexpr (std::is_same_v<T, WhiteUniform>) {
                const double h = std::log(2.0 * p.half_width());
                return u >= h ? n * h : kNegInf;
            } else if constexpr (std::is_same_v<T, ColoredGaussian>) {
                const double ld = p.log_det(n);
                const double rho2 = 2.0 * n * u - n * kLn2Pi - ld;
                if (!(rho2 > 0.0)) return kNegInf;
                return log_ball_volume(n, std::sqrt(rho2)) + 0.5 * ld;
            } else {
                detail::unsupported("stun_level_log_volume", "markov-ar1");
            }
        },
        m);
}

// ln |A_delta^n| with A_delta^n = {x : |-(1/n) ln f^n(x) - h| < delta}.
inline LogVolume typicality_log_volume(const NoiseModel& m, int n, double delta) {
    if (!(delta > 0.0)) throw DomainError("typicality_log_volume: delta must be positive");
    if (!has_level_volume(m)) detail::unsupported("typicality_log_volume", model_name(m));
    const double h = entropy_rate(m);
    if (std::holds_alternative<WhiteUniform>(m)) return stun_level_log_volume(m, n, h);
    return log_diff_exp(stun_level_log_volume(m, n, h + delta), stun_level_log_volume(m, n, h - delta));
}

inline bool in_typical_set(const NoiseModel& m, std::span<const double> x, double delta) {
    const double u = -log_density(m, x) / static_cast<double>(x.size());
    return std::abs(u - entropy_rate(m)) < delta;
}

inline EntropySpectrumSample entropy_spectrum_sample(const NoiseModel& m, int n, Stream& stream) {
    const auto d = sample(m, n, stream);
    return {-log_density(m, d) / n, n};
}

// Large-deviations rate function of the entropy spectrum.
inline double rate_function(const NoiseModel& m, double u) {
    if (std::holds_alternative<MarkovGaussianAR1>(m)) detail::unsupported("rate_function", "markov-ar1");
    const double h = entropy_rate(m);
    const double t = rate_threshold(m);
    if (std::holds_alternative<WhiteUniform>(m))
        return std::abs(u - h) <= 1e-12 * std::max(1.0, std::abs(h)) ? 0.0 : kInf;
    if (!(u > t)) return kInf;
    if (std::holds_alternative<WhiteSymExp>(m)) return u - h - std::log(u - t);
    return u - h - 0.5 * std::log(2.0 * (u - t));
}

} // namespace palmexp
