#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lyam::detail {

inline std::size_t resolve_threads(std::size_t requested, std::size_t jobs) {
    std::size_t n = requested == 0 ? std::thread::hardware_concurrency() : requested;
    return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(jobs, 1));
}

/// Runs fn(i) for i in [0, jobs) on a fixed set of workers. The first
/// exception escaping fn is rethrown after every worker has stopped.
template <typename Fn>
void parallel_for(std::size_t jobs, std::size_t threads, Fn&& fn) {
    threads = resolve_threads(threads, jobs);
    if (threads == 1) {
        for (std::size_t i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < jobs;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace lyam::detail
