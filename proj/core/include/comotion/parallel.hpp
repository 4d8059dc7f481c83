#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace comotion {

// Runs fn(i) for i in [0, n). Work items must be independent; callers keep
// outputs in pre-sized indexed storage so the result is identical for any
// thread count.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    if (n == 0) return;
    const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (nthreads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    const std::size_t chunk = (n + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
        const std::size_t lo = chunk * static_cast<std::size_t>(t);
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace comotion
