#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace fuel {

// Process-wide worker cap.  0 means "use the hardware count".  The CLI sets
// this from --threads or FUEL_DEFAULT_THREADS; library code only reads it.
//
// Estimators must stay bit-identical for every cap, so parallel loops may
// only partition work by index; reductions happen sequentially afterwards.
inline int& thread_cap() {
    static int cap = 0;
    return cap;
}

inline int resolved_threads() {
    int cap = thread_cap();
    if (cap > 0) return cap;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Splits [0, n) into contiguous chunks, one worker per chunk.  The body
// receives (begin, end) and must write results only to per-index slots.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    int workers = std::min<std::size_t>(static_cast<std::size_t>(resolved_threads()), n == 0 ? 1 : n);
    if (workers <= 1 || n < 2) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::size_t chunk = (n + static_cast<std::size_t>(workers) - 1) / static_cast<std::size_t>(workers);
    for (int w = 0; w < workers; ++w) {
        std::size_t begin = static_cast<std::size_t>(w) * chunk;
        std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(body, begin, end);
    }
    for (auto& t : pool) t.join();
}

}  // namespace fuel
