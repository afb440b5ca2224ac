#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace palmexp {

// A Monte Carlo result. `valid` is false when edge events exceed 0.1% of trials.
struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    std::uint64_t edge_events = 0;
    bool valid = true;

    friend bool operator==(const Estimate&, const Estimate&) = default;
};

inline constexpr double kEdgeBudget = 1e-3;

struct TrialOutcome {
    double value;
    bool edge = false;
};

enum class ErrorModel { Binomial, Empirical };

struct RunOptions {
    std::uint64_t trials = 10000;
    std::uint64_t seed = 1;
    // 0 picks the hardware concurrency.
    unsigned threads = 1;
    std::uint64_t batch_size = 1024;
    ErrorModel error = ErrorModel::Empirical;
};

namespace detail {

struct Moments {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;
    std::uint64_t edges = 0;

    void add(double x) {
        count += 1.0;
        const double delta = x - mean;
        mean += delta / count;
        m2 += delta * (x - mean);
    }

    static Moments merge(const Moments& a, const Moments& b) {
        if (a.count == 0.0) return b;
        if (b.count == 0.0) return a;
        Moments out;
        out.count = a.count + b.count;
        const double delta = b.mean - a.mean;
        out.mean = a.mean + delta * (b.count / out.count);
        out.m2 = a.m2 + b.m2 + delta * delta * (a.count * b.count / out.count);
        out.edges = a.edges + b.edges;
        return out;
    }
};

inline Moments pairwise_merge(const std::vector<Moments>& parts, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return parts[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    return Moments::merge(pairwise_merge(parts, lo, mid), pairwise_merge(parts, mid, hi));
}

} // namespace detail

inline Estimate make_estimate(double mean, double std_error, std::uint64_t trials, std::uint64_t seed,
                              std::uint64_t edges) {
    Estimate e;
    e.mean = mean;
    e.std_error = std_error;
    e.ci_lo = mean - 1.96 * std_error;
    e.ci_hi = mean + 1.96 * std_error;
    e.trials = trials;
    e.seed = seed;
    e.edge_events = edges;
    e.valid = static_cast<double>(edges) <= kEdgeBudget * static_cast<double>(trials);
    return e;
}

// Runs `trial(stream, index)` for every index in [0, trials). Trial i always
// draws from Stream(seed, i) and batches are merged in a fixed order, so the
// result does not depend on the thread count.
template <class Trial>
Estimate run_trials(const RunOptions& opt, Trial&& trial) {
    if (opt.trials == 0) throw DomainError("Monte Carlo run needs at least one trial");
    const std::uint64_t batch = std::max<std::uint64_t>(1, opt.batch_size);
    const std::uint64_t batches = (opt.trials + batch - 1) / batch;
    std::vector<detail::Moments> parts(static_cast<std::size_t>(batches));

    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::uint64_t b = next.fetch_add(1);
            if (b >= batches) return;
            try {
                detail::Moments m;
                const std::uint64_t end = std::min(opt.trials, (b + 1) * batch);
                for (std::uint64_t i = b * batch; i < end; ++i) {
                    Stream stream(opt.seed, i);
                    const TrialOutcome r = trial(stream, i);
                    m.add(r.value);
                    if (r.edge) ++m.edges;
                }
                parts[static_cast<std::size_t>(b)] = m;
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(batches);
                return;
            }
        }
    };

    unsigned threads = opt.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opt.threads;
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, batches));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    const detail::Moments total = detail::pairwise_merge(parts, 0, parts.size());
    const double n = total.count;
    double se = 0.0;
    if (opt.error == ErrorModel::Binomial) {
        const double p = std::clamp(total.mean, 0.0, 1.0);
        se = std::sqrt(p * (1.0 - p) / n);
    } else if (n > 1.0) {
        se = std::sqrt(total.m2 / (n - 1.0) / n);
    }
    return make_estimate(total.mean, se, opt.trials, opt.seed, total.edges);
}

} // namespace palmexp
