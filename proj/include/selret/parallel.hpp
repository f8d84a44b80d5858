#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace selret {

// Worker count: explicit request > SELRET_THREADS > hardware concurrency.
inline std::size_t effective_threads(std::size_t requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SELRET_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Static block partition of [0, n); fn(i) must only touch slot i of any
// shared output so results cannot depend on the thread count. The first
// exception thrown by a worker is rethrown on the caller.
inline void parallel_for(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t)>& fn) {
    threads = std::min(effective_threads(threads), n);
    if (n == 0) return;
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end]() {
            try {
                for (std::size_t i = begin; i < end; ++i) {
                    if (failed.load(std::memory_order_relaxed)) return;
                    fn(i);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
            }
        });
    }
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace selret
