#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace psld {

/// Splits [0, n) into contiguous blocks and runs `fn(begin, end)` on each,
/// one block per worker. Work on disjoint chains is independent, so results
/// never depend on the worker count.
struct Executor {
    unsigned threads = 1;

    template <class Fn>
    void for_range(std::size_t n, Fn&& fn) const {
        const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(n / 1024, 1));
        if (workers <= 1) {
            fn(std::size_t{0}, n);
            return;
        }
        const std::size_t chunk = (n + workers - 1) / workers;
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w) {
            const std::size_t b = std::min(n, w * chunk);
            const std::size_t e = std::min(n, b + chunk);
            pool.emplace_back([&fn, b, e] { fn(b, e); });
        }
        fn(std::size_t{0}, std::min(n, chunk));
    }
};

}  // namespace psld
