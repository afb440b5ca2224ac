#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "noise.hpp"
#include "rng.hpp"
#include "spatial_index.hpp"

namespace palmexp {

// L2 ball of the given radius centred at the origin.
struct WindowSpec {
    int n;
    double radius;
    WindowSpec(int n_, double radius_) : n(n_), radius(radius_) {
        if (n_ < 1) throw DomainError("WindowSpec: n must be >= 1");
        if (!(radius_ > 0.0)) throw DomainError("WindowSpec: radius must be positive");
    }
};

struct PoissonOrigin {};
struct Matern1Origin {
    double r_excl;
};
struct MaternStunOrigin {
    double xi;
};
struct GridOrigin {
    double R;
    std::vector<double> shift;
};
using Provenance = std::variant<PoissonOrigin, Matern1Origin, MaternStunOrigin, GridOrigin>;

struct PointConfiguration {
    WindowSpec window;
    PointSet points;
    double log_intensity;
    Provenance provenance;

    int dim() const { return window.n; }
    std::size_t size() const { return points.size(); }
};

inline constexpr double kMaxExpectedPoints = 1e8;

// Default observation window for a tagged point at the origin.
inline double default_window_radius(int n, double sigma, double r_excl = 0.0, std::optional<double> grid_R = {}) {
    double r = 6.0 * sigma * std::sqrt(static_cast<double>(n));
    r = std::max(r, 3.0 * r_excl);
    if (grid_R) r = std::max(r, 3.0 * std::exp(-*grid_R) * std::sqrt(static_cast<double>(n)));
    return r;
}

inline void uniform_in_ball(int n, double radius, Stream& stream, std::span<double> out) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = stream.normal();
        s += out[static_cast<std::size_t>(i)] * out[static_cast<std::size_t>(i)];
    }
    const double scale = radius * std::pow(stream.uniform(), 1.0 / n) / std::sqrt(s);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] *= scale;
}

inline double expected_window_count(const WindowSpec& window, double log_lambda) {
    if (log_lambda == kNegInf) return 0.0;
    return std::exp(log_lambda + log_ball_volume(window.n, window.radius));
}

inline PointSet sample_poisson_points(const WindowSpec& window, double log_lambda, Stream& stream) {
    PointSet out(window.n);
    const double mean = expected_window_count(window, log_lambda);
    if (!(mean <= kMaxExpectedPoints)) {
        std::ostringstream os;
        os << "Poisson window would hold " << mean << " expected points (limit " << kMaxExpectedPoints << ")";
        throw ConfigurationError(os.str());
    }
    const auto count = stream.poisson(mean);
    out.reserve(count);
    std::vector<double> p(static_cast<std::size_t>(window.n));
    for (std::uint64_t i = 0; i < count; ++i) {
        uniform_in_ball(window.n, window.radius, stream, p);
        out.push_back(p);
    }
    return out;
}

inline PointConfiguration sample_poisson(const WindowSpec& window, double log_lambda, Stream& stream) {
    return {window, sample_poisson_points(window, log_lambda, stream), log_lambda, PoissonOrigin{}};
}

namespace detail {
// Keeps points with no other point strictly closer than r.
inline PointSet hard_core_thin(const PointSet& in, double r) {
    PointSet out(in.dim());
    if (in.empty()) return out;
    const double r2 = r * r;
    GridIndex index(in, r);
    for (std::size_t i = 0; i < in.size(); ++i) {
        bool keep = true;
        index.for_each_candidate(in[i], r, [&](std::size_t j) {
            if (keep && j != i && squared_distance(in[i], in[j]) < r2) keep = false;
        });
        if (keep) out.push_back(in[i]);
    }
    return out;
}
} // namespace detail

inline PointConfiguration matern1_thin(const PointConfiguration& config, double r_excl) {
    if (!std::holds_alternative<PoissonOrigin>(config.provenance))
        throw DomainError("matern1_thin expects a Poisson configuration");
    if (!(r_excl > 0.0)) throw DomainError("matern1_thin: exclusion radius must be positive");
    return {config.window, detail::hard_core_thin(config.points, r_excl), config.log_intensity, Matern1Origin{r_excl}};
}

// Exclusion radius of the white Gaussian stun thinning at level xi.
inline double wgn_exclusion_radius(int n, double sigma, double xi) { return wgn_level_radius(n, sigma, xi); }

// L1 exclusion radius of the symmetric exponential stun thinning at level xi.
inline double symexp_exclusion_l1_radius(int n, double sigma, double xi) {
    return symexp_l1_level_radius(n, sigma, xi);
}

// Drops every point T that has another point S with stun(T, S) < xi.
inline PointConfiguration matern_stun_thin(const PointConfiguration& config, const NoiseModel& model, double xi) {
    if (!std::holds_alternative<PoissonOrigin>(config.provenance))
        throw DomainError("matern_stun_thin expects a Poisson configuration");
    const PointSet& in = config.points;
    PointSet out(in.dim());
    const int n = in.dim();
    // Euclidean radius containing the stun exclusion region, when one is known.
    std::optional<double> bound;
    if (const auto* w = std::get_if<WhiteGaussian>(&model)) bound = wgn_exclusion_radius(n, w->sigma, xi);
    if (const auto* s = std::get_if<WhiteSymExp>(&model)) bound = symexp_exclusion_l1_radius(n, s->sigma, xi);
    if (const auto* u = std::get_if<WhiteUniform>(&model)) bound = u->half_width() * std::sqrt(static_cast<double>(n));

    auto close = [&](std::size_t i, std::size_t j) { return j != i && stun(model, in[i], in[j]) < xi; };
    if (bound && *bound <= 0.0) {
        out = in;
    } else if (bound) {
        GridIndex index(in, *bound);
        for (std::size_t i = 0; i < in.size(); ++i) {
            bool keep = true;
            index.for_each_candidate(in[i], *bound, [&](std::size_t j) {
                if (keep && close(i, j)) keep = false;
            });
            if (keep) out.push_back(in[i]);
        }
    } else {
        for (std::size_t i = 0; i < in.size(); ++i) {
            bool keep = true;
            for (std::size_t j = 0; keep && j < in.size(); ++j)
                if (close(i, j)) keep = false;
            if (keep) out.push_back(in[i]);
        }
    }
    return {config.window, std::move(out), config.log_intensity, MaternStunOrigin{xi}};
}

// Points shift + e^{-R} k (k integer) inside the window.
inline PointConfiguration grid_codebook(int n, double R, std::span<const double> shift, const WindowSpec& window) {
    if (shift.size() != static_cast<std::size_t>(n)) throw DomainError("grid_codebook: shift must have n entries");
    if (window.n != n) throw DomainError("grid_codebook: window dimension mismatch");
    const double h = std::exp(-R);
    const double log_count = log_ball_volume(n, window.radius + h * std::sqrt(static_cast<double>(n))) - n * std::log(h);
    if (log_count > std::log(kMaxExpectedPoints)) throw ConfigurationError("grid_codebook: more than 1e8 lattice points in the window");

    PointSet out(n);
    std::vector<double> p(static_cast<std::size_t>(n));
    const double r2 = window.radius * window.radius;
    auto recurse = [&](auto&& self, int dim, double partial) -> void {
        if (dim == n) {
            out.push_back(p);
            return;
        }
        const double rem = r2 - partial;
        if (rem < 0.0) return;
        const double s = shift[static_cast<std::size_t>(dim)];
        const double reach = std::sqrt(rem);
        const auto k_lo = static_cast<long long>(std::ceil((-reach - s) / h));
        const auto k_hi = static_cast<long long>(std::floor((reach - s) / h));
        for (long long k = k_lo; k <= k_hi; ++k) {
            const double x = s + h * static_cast<double>(k);
            if (partial + x * x > r2) continue;
            p[static_cast<std::size_t>(dim)] = x;
            self(self, dim + 1, partial + x * x);
        }
    };
    recurse(recurse, 0, 0.0);
    return {window, std::move(out), n * R, GridOrigin{R, std::vector<double>(shift.begin(), shift.end())}};
}

enum class PalmKind { PoissonSlivnyak, Matern1Palm, GridPalm };

// Recipe for the interferers seen by a tagged codeword at the origin.
struct PalmScenario {
    PalmKind kind;
    int n;
    double log_lambda;
    double r_excl;
    WindowSpec window;

    PalmScenario(PalmKind k, int n_, double log_lambda_, double r_excl_, WindowSpec w)
        : kind(k), n(n_), log_lambda(log_lambda_), r_excl(r_excl_), window(w) {
        if (w.n != n_) throw DomainError("PalmScenario: window dimension mismatch");
        if (k == PalmKind::Matern1Palm && !(r_excl_ > 0.0))
            throw DomainError("PalmScenario: Matern Palm needs a positive exclusion radius");
        if (k == PalmKind::GridPalm && !std::isfinite(log_lambda_))
            throw DomainError("PalmScenario: grid needs a finite intensity");
    }

    double grid_spacing() const { return std::exp(-log_lambda / n); }
};

// Probability that the tagged point survives the rejection step of the Matern Palm sampler.
inline double matern_palm_log_acceptance(const PalmScenario& s) {
    if (s.log_lambda == kNegInf) return 0.0;
    return -std::exp(s.log_lambda + log_ball_volume(s.n, s.r_excl));
}

inline constexpr double kMinMaternAcceptance = 1e-6;

// One rejection attempt; empty when the origin would have been thinned.
inline std::optional<PointSet> matern_palm_attempt(const PalmScenario& s, Stream& stream) {
    PointSet parent = sample_poisson_points(s.window, s.log_lambda, stream);
    const double r2 = s.r_excl * s.r_excl;
    for (std::size_t i = 0; i < parent.size(); ++i)
        if (squared_norm(parent[i]) < r2) return std::nullopt;
    // The origin has no neighbour within r_excl, so it survives and cannot
    // remove any other point; thinning the parent alone gives the survivors.
    return detail::hard_core_thin(parent, s.r_excl);
}

inline PointSet sample_palm_interferers(const PalmScenario& s, Stream& stream) {
    switch (s.kind) {
    case PalmKind::PoissonSlivnyak:
        return sample_poisson_points(s.window, s.log_lambda, stream);
    case PalmKind::Matern1Palm: {
        if (matern_palm_log_acceptance(s) < std::log(kMinMaternAcceptance)) {
            std::ostringstream os;
            os << "Matern Palm acceptance probability exp(" << matern_palm_log_acceptance(s)
               << ") is below " << kMinMaternAcceptance;
            throw ScenarioError(os.str());
        }
        for (;;) {
            if (auto pts = matern_palm_attempt(s, stream)) return std::move(*pts);
        }
    }
    case PalmKind::GridPalm: {
        const std::vector<double> zero(static_cast<std::size_t>(s.n), 0.0);
        const auto grid = grid_codebook(s.n, s.log_lambda / s.n, zero, s.window);
        PointSet out(s.n);
        for (std::size_t i = 0; i < grid.points.size(); ++i)
            if (squared_norm(grid.points[i]) > 0.0) out.push_back(grid.points[i]);
        return out;
    }
    }
    throw DomainError("unknown Palm scenario kind");
}

} // namespace palmexp
