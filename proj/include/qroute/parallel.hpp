#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace qroute {

inline std::size_t default_thread_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs f(0..n-1) on up to max_threads workers. Each index runs exactly once;
// the exception from the lowest failing index is rethrown after all finish.
template <typename F>
void parallel_for(std::size_t n, F&& f, std::size_t max_threads = default_thread_count()) {
    std::vector<std::exception_ptr> errors(n);
    const std::size_t workers = std::max<std::size_t>(1, std::min(n, max_threads));
    auto run = [&](std::size_t w) {
        for (std::size_t i = w; i < n; i += workers) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace qroute
