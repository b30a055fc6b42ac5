#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

namespace dvqe {

/// Runs fn(0..n_tasks) across up to `workers` threads.  Tasks must derive any
/// randomness from their index so the result is independent of scheduling.
inline void parallel_for(std::size_t n_tasks, int workers,
                         const std::function<void(std::size_t)>& fn) {
    if (workers < 1) throw std::invalid_argument("parallel_for: workers must be >= 1");
    if (workers == 1 || n_tasks <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    const std::size_t n_threads = std::min<std::size_t>(workers, n_tasks);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        pool.emplace_back([&, t]() {
            try {
                for (std::size_t i = t; i < n_tasks; i += n_threads) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace dvqe
