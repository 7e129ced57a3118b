#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace avrsafe {

inline constexpr const char* kThreadsEnv = "AVRSAFE_THREADS";

/// Thread count from the argument if nonzero, else AVRSAFE_THREADS, else the
/// hardware concurrency.
std::size_t resolve_threads(std::size_t requested = 0);

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunks are static,
/// so any result written to a per-index slot is independent of scheduling.
template <class Body>
void parallel_for(std::size_t n, std::size_t threads, Body&& body) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace avrsafe
