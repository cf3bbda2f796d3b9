#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <cstddef>
#include <thread>
#include <vector>

namespace gfsvi {

// Worker count: hardware concurrency capped by the GFSVI_THREADS env var.
inline unsigned thread_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("GFSVI_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return n;
}

// Chunk size is fixed so reductions combine partials in the same order for
// any worker count.
constexpr std::size_t kParallelChunk = 1024;

template <typename Fn>
void parallel_for(std::size_t n, Fn&& body) {
    const unsigned workers = thread_count();
    if (workers <= 1 || n < 2 * kParallelChunk) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t nchunks = (n + kParallelChunk - 1) / kParallelChunk;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::atomic<std::size_t> next{0};
    for (unsigned t = 0; t < workers; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t c = next.fetch_add(1);
                if (c >= nchunks) break;
                const std::size_t lo = c * kParallelChunk;
                const std::size_t hi = std::min(n, lo + kParallelChunk);
                for (std::size_t i = lo; i < hi; ++i) body(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

// Deterministic parallel sum: per-chunk partials accumulated in index order,
// then combined in chunk order regardless of scheduling.
template <typename Fn>
double parallel_sum(std::size_t n, Fn&& term) {
    const std::size_t nchunks = (n + kParallelChunk - 1) / kParallelChunk;
    std::vector<double> partial(nchunks, 0.0);
    parallel_for(nchunks, [&](std::size_t c) {
        const std::size_t lo = c * kParallelChunk;
        const std::size_t hi = std::min(n, lo + kParallelChunk);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += term(i);
        partial[c] = s;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace gfsvi
