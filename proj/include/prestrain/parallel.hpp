#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace prestrain {

/// Runs body(i) for i in [0, n) on up to `threads` workers with static chunking.
/// Callers write into per-index slots, so results never depend on scheduling.
template <class Body>
void parallel_for(int n, int threads, Body&& body) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (int i = lo; i < hi; ++i) body(i);
        });
    }
}

}  // namespace prestrain
