// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace splatlab {

/// Worker count for parallel stages. One when `deterministic`; otherwise the
/// hardware concurrency, capped by the SPLATLAB_THREADS environment variable.
inline int worker_count(bool deterministic) {
    if (deterministic) return 1;
    int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char *env = std::getenv("SPLATLAB_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap > 0) n = std::min(n, cap);
        } catch (const std::exception &) {
        }
    }
    return n;
}

/// Runs fn(index, worker) for index in [0, count) on `workers` threads.
/// Indices are handed out dynamically; each worker id is used by exactly one
/// thread, so per-worker scratch needs no locking.
template <typename Fn> void parallel_for(std::size_t count, int workers, Fn &&fn) {
    workers = std::max(1, std::min<int>(workers, static_cast<int>(std::min<std::size_t>(count, 1u << 16))));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i, 0);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&](int worker) {
        try {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i, worker);
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next.store(count);
        }
    };
    {
        std::vector<std::jthread> threads;
        threads.reserve(workers - 1);
        for (int w = 1; w < workers; ++w) threads.emplace_back(body, w);
        body(0);
    }
    if (error) std::rethrow_exception(error);
}

} // namespace splatlab
