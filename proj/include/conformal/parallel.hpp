#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace conformal {

/// Runs f(i) for i in [0, count) on up to `threads` worker threads.
/// threads <= 1 executes inline. Work items must be independent.
template <typename F>
void parallel_for(std::size_t count, unsigned threads, F&& f) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) f(i);
    };
    std::vector<std::thread> pool;
    unsigned spawn = std::min<unsigned>(threads, static_cast<unsigned>(count));
    pool.reserve(spawn);
    for (unsigned w = 0; w < spawn; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

}  // namespace conformal
