#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace palmexp {

namespace detail {
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
} // namespace detail

// SplitMix64 stream keyed by (seed, stream id). Streams with different ids are
// independent, so trial i always sees the same numbers whatever thread runs it.
class Stream {
public:
    using result_type = std::uint64_t;

    Stream(std::uint64_t seed, std::uint64_t stream_id)
        : state_(detail::mix64(seed + 0x9e3779b97f4a7c15ULL) ^
                 detail::mix64(stream_id * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return detail::mix64(state_);
    }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() { return normal_(*this); }

    double laplace(double scale) {
        const double e = -std::log1p(-uniform());
        return ((*this)() & 1ULL) ? scale * e : -scale * e;
    }

    std::uint64_t poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        std::poisson_distribution<std::uint64_t> dist(mean);
        return dist(*this);
    }

private:
    std::uint64_t state_;
    std::normal_distribution<double> normal_;
};

} // namespace palmexp
