#pragma once
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace s3forge {

// Worker count: S3FORGE_THREADS if set (>= 1), else hardware concurrency.
inline unsigned thread_budget() {
    if (const char* env = std::getenv("S3FORGE_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? hc : 1;
}

// Run fn(i) for i in [0, n). fn must write only to per-index slots so the
// result is independent of scheduling; fn must not throw.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    std::size_t nt = std::min<std::size_t>(thread_budget(), n);
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (std::size_t t = 0; t < nt; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
        });
    for (std::thread& th : pool) th.join();
}

} // namespace s3forge
