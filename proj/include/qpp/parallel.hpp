#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace qpp {

// Runs body(i) for i in [0, count) on up to `workers` threads. Results must
// be written by index so the outcome does not depend on scheduling. If any
// call throws, the exception from the lowest index is rethrown after all
// workers finish.
template <class Body>
void parallel_for(std::size_t count, int workers, Body&& body) {
    if (count == 0) return;
    const std::size_t threads = std::min<std::size_t>(std::max(workers, 1), count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        run();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads - 1);
        for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(run);
        run();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace qpp
