#pragma once

#include <algorithm>
#include <cmath>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace mixlab {

namespace detail {
inline std::atomic<unsigned>& thread_setting() {
    static std::atomic<unsigned> threads{1};
    return threads;
}
} // namespace detail

// Worker count used by all sample-parallel estimators. Never affects results.
inline unsigned default_threads() { return detail::thread_setting().load(); }
inline void set_default_threads(unsigned n) { detail::thread_setting().store(std::max(1u, n)); }

// Fixed block length of the reduction tree. Results depend on this constant,
// not on the worker count.
inline constexpr std::size_t kReduceBlock = 2048;

/// Deterministic parallel reduction over sample indices [0, n).
///
/// `make()` creates an empty accumulator, `body(i, acc)` folds sample i into
/// it and `merge(into, from)` combines two accumulators. Samples are grouped
/// into fixed blocks that are folded sequentially and merged in block order,
/// so the floating-point result is bit-identical for any thread count.
template <class Make, class Body, class Merge>
auto block_reduce(std::size_t n, Make make, Body body, Merge merge, unsigned threads = default_threads()) {
    using Acc = decltype(make());
    const std::size_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
    std::vector<Acc> partial;
    partial.reserve(blocks);
    for (std::size_t b = 0; b < blocks; ++b) partial.push_back(make());

    auto run_block = [&](std::size_t b) {
        const std::size_t lo = b * kReduceBlock;
        const std::size_t hi = std::min(n, lo + kReduceBlock);
        for (std::size_t i = lo; i < hi; ++i) body(i, partial[b]);
    };

    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), blocks));
    if (workers <= 1) {
        for (std::size_t b = 0; b < blocks; ++b) run_block(b);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t b = next++; b < blocks; b = next++) run_block(b);
            });
        }
    }

    Acc total = make();
    for (auto& p : partial) merge(total, p);
    return total;
}

// Evaluates f(i) for i in [0, n) into a vector; order-normalized by index.
template <class F>
auto parallel_map(std::size_t n, F f, unsigned threads = default_threads()) {
    using T = decltype(f(std::size_t{0}));
    std::vector<T> out(n);
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) out[i] = f(i);
            });
        }
    }
    return out;
}

/// Running first and second moments of several quantities; merge is exact
/// summation in a fixed order.
struct Moments {
    std::vector<double> sum;
    std::vector<double> sum_sq;
    std::size_t count = 0;

    explicit Moments(std::size_t dims = 1) : sum(dims, 0.0), sum_sq(dims, 0.0) {}

    void add(std::size_t d, double v) {
        sum[d] += v;
        sum_sq[d] += v * v;
    }

    void merge(const Moments& o) {
        for (std::size_t d = 0; d < sum.size(); ++d) {
            sum[d] += o.sum[d];
            sum_sq[d] += o.sum_sq[d];
        }
        count += o.count;
    }

    double mean(std::size_t d) const { return count ? sum[d] / static_cast<double>(count) : 0.0; }

    // Standard error of the mean.
    double stderr_of_mean(std::size_t d) const {
        if (count < 2) return 0.0;
        const double n = static_cast<double>(count);
        const double m = sum[d] / n;
        const double var = std::max(0.0, (sum_sq[d] / n - m * m) * n / (n - 1.0));
        return std::sqrt(var / n);
    }
};

} // namespace mixlab
