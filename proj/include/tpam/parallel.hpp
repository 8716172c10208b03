#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace tpam {

// Strided index partition across worker threads. Results must be written to
// per-index slots by the callable; the first exception wins and is rethrown
// on the calling thread after all workers join.
template <typename Fn>
inline void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
    if (count == 0) return;
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_lock;
    auto run_chunk = [&](std::size_t w) {
        try {
            for (std::size_t i = w; i < count; i += workers) fn(i);
        } catch (...) {
            std::lock_guard<std::mutex> hold(error_lock);
            if (!first_error) first_error = std::current_exception();
        }
    };
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run_chunk, w);
    run_chunk(0);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace tpam
