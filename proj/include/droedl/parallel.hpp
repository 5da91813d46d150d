#pragma once

// Index-parallel loop capped by the DRO_EDL_THREADS environment variable.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace droedl {

/// DRO_EDL_THREADS if set to a positive integer, otherwise the hardware concurrency.
inline std::size_t thread_count() {
    if (const char* env = std::getenv("DRO_EDL_THREADS")) {
        try {
            const long n = std::stol(env);
            if (n >= 1)
                return static_cast<std::size_t>(n);
        } catch (const std::exception&) {
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Calls f(i) for i in [0, n). Results must be written to per-index slots; the
/// exception of the lowest failing index is rethrown.
template <class F>
void parallel_for(std::size_t n, F&& f, std::size_t threads = thread_count()) {
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_index = n;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                f(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace droedl
