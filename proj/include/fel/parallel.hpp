/// @file parallel.hpp
/// @brief Deterministic data-parallel loops. Work is split into fixed-size
///        chunks independent of the thread count, and any reduction happens
///        in chunk order, so results are bitwise identical for 1..N threads.
///        FEL_THREADS caps the pool.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace fel {

inline unsigned thread_budget() {
    if (const char* env = std::getenv("FEL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

/// Runs fn(begin, end) over [0, n) in contiguous chunks.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                         std::size_t grain = 256) {
    const unsigned nt = thread_budget();
    if (nt <= 1 || n <= grain) {
        if (n > 0) fn(0, n);
        return;
    }
    const std::size_t chunks = (n + grain - 1) / grain;
    std::vector<std::thread> pool;
    const unsigned workers = std::min<unsigned>(nt, static_cast<unsigned>(chunks));
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t c = next.fetch_add(1);
                if (c >= chunks) return;
                const std::size_t b = c * grain;
                fn(b, std::min(n, b + grain));
            }
        });
    }
    for (auto& th : pool) th.join();
}

/// Chunked reduction with K accumulators per chunk; partials are combined in
/// chunk order regardless of which thread produced them.
template <std::size_t K>
inline std::array<double, K> parallel_reduce(
    std::size_t n,
    const std::function<void(std::size_t, std::size_t, std::array<double, K>&)>& fn,
    std::size_t grain = 64) {
    const std::size_t chunks = n == 0 ? 0 : (n + grain - 1) / grain;
    std::vector<std::array<double, K>> partial(chunks);
    parallel_for(
        chunks,
        [&](std::size_t cb, std::size_t ce) {
            for (std::size_t c = cb; c < ce; ++c) {
                partial[c].fill(0.0);
                const std::size_t b = c * grain;
                fn(b, std::min(n, b + grain), partial[c]);
            }
        },
        1);
    std::array<double, K> total;
    total.fill(0.0);
    for (const auto& p : partial)
        for (std::size_t k = 0; k < K; ++k) total[k] += p[k];
    return total;
}

} // namespace fel
