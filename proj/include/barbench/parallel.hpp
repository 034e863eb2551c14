#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace barbench {

// Worker cap: BARBENCH_THREADS when set, hardware concurrency otherwise.
inline unsigned max_workers() {
    if (const char* env = std::getenv("BARBENCH_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs f(i) for i in [0, count) across up to max_workers() threads. Each index
// must touch only its own output slot; iteration order inside a worker is
// ascending, so results are deterministic regardless of the thread count.
template <typename F>
void parallel_for(std::size_t count, F&& f) {
    const unsigned workers = std::min<std::size_t>(max_workers(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) f(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace barbench
