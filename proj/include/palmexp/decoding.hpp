#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "noise.hpp"
#include "spatial_index.hpp"

namespace palmexp {

enum class DecodeStatus { Success, Failure, Ambiguous };

struct DecodeOutcome {
    DecodeStatus status = DecodeStatus::Success;
    // For ambiguous outcomes: result of the Euclidean tie-break.
    bool fallback_success = false;
    // Interferer that won (failure) or tied (ambiguous).
    std::optional<std::size_t> cause;

    bool decoded() const {
        return status == DecodeStatus::Success || (status == DecodeStatus::Ambiguous && fallback_success);
    }
};

struct MleDecoder {};
struct TypicalityDecoder {
    double delta;
};
struct MismatchedDecoder {
    NoiseModel design;
};
using DecoderSpec = std::variant<MleDecoder, TypicalityDecoder, MismatchedDecoder>;

namespace detail {

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

// x^T Gamma^{-1} x for the stationary AR(1) covariance.
inline double ar1_quadratic_form(const MarkovGaussianAR1& m, std::span<const double> x) {
    if (x.empty()) return 0.0;
    const double se2 = m.sigma_eps * m.sigma_eps;
    double q = x[0] * x[0] / m.stationary_variance();
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double e = x[i] - m.a * x[i - 1];
        q += e * e / se2;
    }
    return q;
}

template <class F>
void for_each_interferer(const PointSet& pts, const GridIndex* index, std::span<const double> d, double radius, F&& f) {
    if (index != nullptr && std::isfinite(radius)) {
        index->for_each_candidate(d, radius, f);
    } else {
        for (std::size_t i = 0; i < pts.size(); ++i) f(i);
    }
}

// Generic comparison decoder: `score(T)` is compared with `score0`; lower wins.
template <class Score>
DecodeOutcome compare_rule(const PointSet& pts, const GridIndex* index, std::span<const double> d, double radius,
                           double score0, Score&& score) {
    DecodeOutcome out;
    std::vector<std::size_t> ties;
    bool failed = false;
    for_each_interferer(pts, index, d, radius, [&](std::size_t i) {
        if (failed) return;
        const double s = score(pts[i]);
        if (s < score0) {
            failed = true;
            out.status = DecodeStatus::Failure;
            out.cause = i;
        } else if (s == score0) {
            ties.push_back(i);
        }
    });
    if (failed || ties.empty()) return out;
    out.status = DecodeStatus::Ambiguous;
    out.cause = ties.front();
    const double d0 = squared_norm(d);
    out.fallback_success = true;
    for (std::size_t i : ties)
        if (!(d0 < squared_distance(d, pts[i]))) out.fallback_success = false;
    return out;
}

} // namespace detail

// Radius around d that contains every interferer able to beat the origin.
inline double local_witness_radius(const NoiseModel& m, std::span<const double> d) {
    const double n = static_cast<double>(d.size());
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, WhiteGaussian>) return std::sqrt(squared_norm(d));
            else if constexpr (std::is_same_v<T, WhiteSymExp>) {
                double s = 0.0;
                for (double v : d) s += std::abs(v);
                return s;
            } else if constexpr (std::is_same_v<T, WhiteUniform>) return p.half_width() * std::sqrt(n);
            else if constexpr (std::is_same_v<T, ColoredGaussian>)
                return p.max_axis_scale_bound() * std::sqrt(p.quadratic_form(d));
            else return p.sigma_eps / (1.0 - std::abs(p.a)) * std::sqrt(detail::ar1_quadratic_form(p, d));
        },
        m);
}

// Radius around the origin containing the typical set.
inline double typical_set_radius(const NoiseModel& m, int n, double delta) {
    const double h = entropy_rate(m);
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, WhiteGaussian>)
                return wgn_level_radius(n, p.sigma, h + delta);
            else if constexpr (std::is_same_v<T, WhiteSymExp>)
                return symexp_l1_level_radius(n, p.sigma, h + delta);
            else if constexpr (std::is_same_v<T, WhiteUniform>) return p.half_width() * std::sqrt(static_cast<double>(n));
            else if constexpr (std::is_same_v<T, ColoredGaussian>) {
                const double rho2 = 2.0 * n * (h + delta) - n * kLn2Pi - p.log_det(n);
                return rho2 > 0.0 ? p.max_axis_scale_bound() * std::sqrt(rho2) : 0.0;
            } else detail::unsupported("typicality decoding", "markov-ar1");
        },
        m);
}

// Stun comparison for an arbitrary model: T beats the origin when
// stun(d, T) < stun(d, 0).
inline DecodeOutcome stun_rule(const NoiseModel& m, const PointSet& interferers, std::span<const double> d) {
    const double n = static_cast<double>(d.size());
    const double s0 = -log_density(m, d) / n;
    std::vector<double> diff(d.size());
    return detail::compare_rule(interferers, nullptr, d, kInf, s0, [&](std::span<const double> t) {
        for (std::size_t i = 0; i < d.size(); ++i) diff[i] = d[i] - t[i];
        return -log_density(m, diff) / n;
    });
}

inline DecodeOutcome mle_success(const NoiseModel& m, const PointSet& interferers, std::span<const double> d,
                                 const GridIndex* index = nullptr) {
    if (interferers.empty()) return {};
    if (interferers.dim() != static_cast<int>(d.size())) throw DomainError("mle_success: dimension mismatch");
    const double radius = local_witness_radius(m, d);
    if (std::holds_alternative<WhiteGaussian>(m)) {
        return detail::compare_rule(interferers, index, d, radius, squared_norm(d),
                                    [&](std::span<const double> t) { return squared_distance(d, t); });
    }
    if (std::holds_alternative<WhiteSymExp>(m)) {
        const std::vector<double> zero(d.size(), 0.0);
        return detail::compare_rule(interferers, index, d, radius, detail::l1_distance(d, zero),
                                    [&](std::span<const double> t) { return detail::l1_distance(d, t); });
    }
    if (const auto* c = std::get_if<ColoredGaussian>(&m)) {
        std::vector<double> diff(d.size());
        return detail::compare_rule(interferers, index, d, radius, c->quadratic_form(d), [&](std::span<const double> t) {
            for (std::size_t i = 0; i < d.size(); ++i) diff[i] = d[i] - t[i];
            return c->quadratic_form(diff);
        });
    }
    if (std::holds_alternative<WhiteUniform>(m)) {
        const double n = static_cast<double>(d.size());
        std::vector<double> diff(d.size());
        return detail::compare_rule(interferers, index, d, radius, -log_density(m, d) / n, [&](std::span<const double> t) {
            for (std::size_t i = 0; i < d.size(); ++i) diff[i] = d[i] - t[i];
            return -log_density(m, diff) / n;
        });
    }
    return stun_rule(m, interferers, d);
}

inline DecodeOutcome mismatched_success(const NoiseModel& design, const PointSet& interferers, std::span<const double> d,
                                        const GridIndex* index = nullptr) {
    return mle_success(design, interferers, d, index);
}

// Sufficient condition for typicality decoding: d is typical and no d - T is.
inline DecodeOutcome typicality_success(const NoiseModel& m, double delta, const PointSet& interferers,
                                        std::span<const double> d, const GridIndex* index = nullptr) {
    if (!(delta > 0.0)) throw DomainError("typicality_success: delta must be positive");
    if (std::holds_alternative<MarkovGaussianAR1>(m)) detail::unsupported("typicality decoding", "markov-ar1");
    DecodeOutcome out;
    if (!in_typical_set(m, d, delta)) {
        out.status = DecodeStatus::Failure;
        return out;
    }
    const double radius = typical_set_radius(m, static_cast<int>(d.size()), delta);
    std::vector<double> diff(d.size());
    detail::for_each_interferer(interferers, index, d, radius, [&](std::size_t i) {
        if (out.status == DecodeStatus::Failure) return;
        const auto t = interferers[i];
        for (std::size_t k = 0; k < d.size(); ++k) diff[k] = d[k] - t[k];
        if (in_typical_set(m, diff, delta)) {
            out.status = DecodeStatus::Failure;
            out.cause = i;
        }
    });
    return out;
}

inline DecodeOutcome decode(const DecoderSpec& decoder, const NoiseModel& actual, const PointSet& interferers,
                            std::span<const double> d, const GridIndex* index = nullptr) {
    return std::visit(
        [&](const auto& dec) -> DecodeOutcome {
            using T = std::decay_t<decltype(dec)>;
            if constexpr (std::is_same_v<T, MleDecoder>) return mle_success(actual, interferers, d, index);
            else if constexpr (std::is_same_v<T, TypicalityDecoder>)
                return typicality_success(actual, dec.delta, interferers, d, index);
            else return mismatched_success(dec.design, interferers, d, index);
        },
        decoder);
}

// Radius around the origin beyond which no interferer can change the decision.
inline double witness_radius(const DecoderSpec& decoder, const NoiseModel& actual, std::span<const double> d) {
    const double norm = std::sqrt(squared_norm(d));
    return std::visit(
        [&](const auto& dec) -> double {
            using T = std::decay_t<decltype(dec)>;
            if constexpr (std::is_same_v<T, MleDecoder>) return norm + local_witness_radius(actual, d);
            else if constexpr (std::is_same_v<T, TypicalityDecoder>)
                return norm + typical_set_radius(actual, static_cast<int>(d.size()), dec.delta);
            else return norm + local_witness_radius(dec.design, d);
        },
        decoder);
}

// Cell side suited to the queries made by `decode` for noise of this model.
inline double index_cell_hint(const DecoderSpec& decoder, const NoiseModel& actual, int n) {
    const NoiseModel& m = std::holds_alternative<MismatchedDecoder>(decoder) ? std::get<MismatchedDecoder>(decoder).design : actual;
    return std::max(1e-9, std::sqrt(noise_variance(m) * n));
}

} // namespace palmexp
