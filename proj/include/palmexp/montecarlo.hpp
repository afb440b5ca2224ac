#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "decoding.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "noise.hpp"
#include "pointprocess.hpp"
#include "rng.hpp"
#include "spatial_index.hpp"
#include "trials.hpp"

namespace palmexp {

enum class McMode { Explicit, Reduced };

inline const char* mode_name(McMode m) { return m == McMode::Explicit ? "explicit" : "reduced"; }

namespace detail {

// Point count above which decoding goes through a spatial index.
inline constexpr std::size_t kIndexThreshold = 64;

inline void require_scenario_dim(const PalmScenario& s, const NoiseModel& m) {
    if (const auto* c = std::get_if<ColoredGaussian>(&m)) c->require(s.n);
}

// Interferers for one trial. The grid Palm configuration is deterministic and is shared.
class InterfererSource {
  public:
    explicit InterfererSource(const PalmScenario& s) : scenario_(s) {
        if (s.kind == PalmKind::GridPalm) {
            Stream unused(0, 0);
            grid_ = sample_palm_interferers(s, unused);
        }
    }

    const PointSet& draw(Stream& stream, PointSet& scratch) const {
        if (grid_) return *grid_;
        scratch = sample_palm_interferers(scenario_, stream);
        return scratch;
    }

  private:
    const PalmScenario& scenario_;
    std::optional<PointSet> grid_;
};

inline std::optional<GridIndex> make_index(const PointSet& pts, double cell) {
    if (pts.size() <= kIndexThreshold) return std::nullopt;
    return GridIndex(pts, cell);
}

// Whether a decision about noise d may depend on points the window does not hold.
inline bool decision_is_edge(const PalmScenario& s, const DecoderSpec& dec, const NoiseModel& m, const PointSet& pts,
                             std::span<const double> d, const DecodeOutcome& out) {
    const double radius = s.window.radius;
    if (!out.decoded()) {
        // A failure caused by a simulated point is real unless that point's own
        // survival of the thinning depended on points beyond the window.
        if (s.kind == PalmKind::Matern1Palm && out.cause)
            return std::sqrt(squared_norm(pts[*out.cause])) > radius - s.r_excl;
        return false;
    }
    return witness_radius(dec, m, d) > radius;
}

} // namespace detail

// Error probability of the tagged codeword at the origin.
//
// Explicit mode simulates interferers and noise and applies the decoder.
// Reduced mode integrates the Poisson interferers out: given the noise level u
// the success probability is exp(-lambda W(u)).
inline Estimate estimate_pe(const PalmScenario& s, const DecoderSpec& dec, const NoiseModel& m, McMode mode,
                            const RunOptions& opt) {
    detail::require_scenario_dim(s, m);
    const int n = s.n;
    if (mode == McMode::Reduced) {
        if (s.kind != PalmKind::PoissonSlivnyak)
            throw ConfigurationError("reduced mode needs a Poisson (Slivnyak) scenario");
        if (!std::holds_alternative<MleDecoder>(dec)) throw ConfigurationError("reduced mode needs the MLE decoder");
        if (!has_level_volume(m))
            throw ConfigurationError("reduced mode needs a noise model with closed-form level volumes, got " + model_name(m));
        RunOptions o = opt;
        o.error = ErrorModel::Empirical;
        return run_trials(o, [&](Stream& stream, std::uint64_t) {
            std::vector<double> d(static_cast<std::size_t>(n));
            sample_into(m, d, stream);
            const double u = -log_density(m, d) / n;
            return TrialOutcome{std::exp(log_one_minus_exp_neg(s.log_lambda + stun_level_log_volume(m, n, u)))};
        });
    }

    const detail::InterfererSource source(s);
    const double cell = index_cell_hint(dec, m, n);
    RunOptions o = opt;
    o.error = ErrorModel::Binomial;
    return run_trials(o, [&](Stream& stream, std::uint64_t) {
        PointSet scratch(n);
        const PointSet& pts = source.draw(stream, scratch);
        std::vector<double> d(static_cast<std::size_t>(n));
        sample_into(m, d, stream);
        const auto index = detail::make_index(pts, cell);
        const DecodeOutcome out = decode(dec, m, pts, d, index ? &*index : nullptr);
        return TrialOutcome{out.decoded() ? 0.0 : 1.0, detail::decision_is_edge(s, dec, m, pts, d, out)};
    });
}

// Mass-transport dual of the error probability: every interferer T is moved by
// its own noise draw to Y = T + D_T, and the trial value counts the Y that the
// MLE rule assigns to the origin.
inline Estimate estimate_pe_mass_transport(const PalmScenario& s, const NoiseModel& m, const RunOptions& opt) {
    detail::require_scenario_dim(s, m);
    const int n = s.n;
    const detail::InterfererSource source(s);
    const DecoderSpec dec = MleDecoder{};
    const double cell = index_cell_hint(dec, m, n);
    RunOptions o = opt;
    o.error = ErrorModel::Empirical;
    return run_trials(o, [&](Stream& stream, std::uint64_t) {
        PointSet scratch(n);
        const PointSet& pts = source.draw(stream, scratch);
        const auto index = detail::make_index(pts, cell);
        std::vector<double> noise(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
        const std::vector<double> origin(static_cast<std::size_t>(n), 0.0);
        double count = 0.0;
        bool edge = false;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            sample_into(m, noise, stream);
            const auto t = pts[i];
            for (std::size_t k = 0; k < y.size(); ++k) y[k] = t[k] + noise[k];
            // T itself already claims Y unless the origin beats it.
            if (!(stun(m, y, origin) < stun(m, y, t))) continue;
            const DecodeOutcome out = mle_success(m, pts, y, index ? &*index : nullptr);
            if (!out.decoded()) continue;
            count += 1.0;
            if (witness_radius(dec, m, y) > s.window.radius) edge = true;
        }
        return TrialOutcome{count, edge};
    });
}

// Monte Carlo estimate of -d p_s / d lambda for Poisson codebooks under white
// Gaussian noise with Voronoi decoding, as the mean volume of the set of
// positions y at which an added codeword would capture the noise x.
inline Estimate estimate_perturbation_integral(int n, double lambda, double sigma, const RunOptions& opt) {
    if (n < 1) throw DomainError("n must be >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be finite and nonnegative");
    const WhiteGaussian m(sigma);
    const WindowSpec window(n, default_window_radius(n, sigma));
    const double log_lambda = lambda > 0.0 ? std::log(lambda) : kNegInf;
    RunOptions o = opt;
    o.error = ErrorModel::Empirical;
    return run_trials(o, [&](Stream& stream, std::uint64_t) {
        std::vector<double> x(static_cast<std::size_t>(n));
        sample_into(m, x, stream);
        PointSet pts = sample_poisson_points(window, log_lambda, stream);
        // The set is empty unless x is currently decoded to the origin.
        if (!mle_success(m, pts, x).decoded()) return TrialOutcome{0.0};
        const double r = std::sqrt(squared_norm(x));
        const bool edge = 2.0 * r > window.radius;
        // Otherwise it is contained in the ball B(x, |x|); hit-or-miss inside it.
        std::vector<double> y(static_cast<std::size_t>(n));
        uniform_in_ball(n, r, stream, y);
        for (std::size_t k = 0; k < y.size(); ++k) y[k] += x[k];
        pts.push_back(y);
        const bool hit = !mle_success(m, pts, x).decoded();
        return TrialOutcome{hit ? std::exp(log_ball_volume(n, r)) : 0.0, edge};
    });
}

} // namespace palmexp
