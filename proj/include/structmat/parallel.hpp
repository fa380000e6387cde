#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace structmat {

// Thread cap: STRUCTMAT_THREADS env var, else hardware concurrency.
inline int thread_count() {
    if (const char* env = std::getenv("STRUCTMAT_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Static block partition; `fn(begin, end)` is called on each worker's range.
// Output slots must be disjoint per index for determinism.
inline void parallel_for_ranges(size_t count, const std::function<void(size_t, size_t)>& fn) {
    int nt = thread_count();
    if (nt <= 1 || count < 1024) {
        fn(0, count);
        return;
    }
    size_t chunk = (count + nt - 1) / nt;
    std::vector<std::thread> workers;
    for (int t = 0; t < nt; ++t) {
        size_t b = std::min(count, static_cast<size_t>(t) * chunk);
        size_t e = std::min(count, b + chunk);
        if (b >= e) break;
        workers.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& w : workers) w.join();
}

inline void parallel_for(size_t count, const std::function<void(size_t)>& fn) {
    parallel_for_ranges(count, [&fn](size_t b, size_t e) {
        for (size_t i = b; i < e; ++i) fn(i);
    });
}

}  // namespace structmat
