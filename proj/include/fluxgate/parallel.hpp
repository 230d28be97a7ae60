// Copyright 2026 The fluxgate developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fluxgate {

/// Worker count from FLUXGATE_WORKERS, falling back to the hardware count.
inline int default_worker_count() {
    if (const char* env = std::getenv("FLUXGATE_WORKERS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Deterministic parallel map: results are collected by task index, so the
/// output order is independent of the worker count.
template <class Result, class Fn>
std::vector<Result> parallel_map(int n_tasks, Fn&& fn, int workers = 0) {
    if (workers <= 0) workers = default_worker_count();
    std::vector<Result> results(static_cast<size_t>(std::max(0, n_tasks)));
    if (n_tasks <= 0) return results;
    if (workers == 1 || n_tasks == 1) {
        for (int i = 0; i < n_tasks; ++i) results[i] = fn(i);
        return results;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_tasks) break;
            try {
                results[i] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n_tasks);
                break;
            }
        }
    };
    std::vector<std::thread> pool;
    const int count = std::min(workers, n_tasks);
    pool.reserve(count);
    for (int w = 0; w < count; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return results;
}

}  // namespace fluxgate
