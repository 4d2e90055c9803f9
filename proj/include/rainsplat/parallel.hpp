#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace rainsplat {

// Runs fn(begin, end) over fixed-size chunks of [0, n). The chunk
// decomposition depends only on n, so per-chunk accumulation gives
// results independent of the worker count.
template <typename Fn>
void parallel_chunks(std::size_t n, std::size_t chunk, unsigned threads, Fn&& fn) {
    if (n == 0) return;
    if (chunk == 0) chunk = 1;
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    if (threads <= 1 || n_chunks <= 1) {
        for (std::size_t i = 0; i < n_chunks; ++i)
            fn(i * chunk, std::min(n, (i + 1) * chunk));
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    const unsigned n_workers = std::min<unsigned>(threads, static_cast<unsigned>(n_chunks));
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n_chunks) return;
                fn(i * chunk, std::min(n, (i + 1) * chunk));
            }
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace rainsplat
