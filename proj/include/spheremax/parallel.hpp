#ifndef SPHEREMAX_PARALLEL_HPP
#define SPHEREMAX_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace spheremax {

/// Worker cap used when a caller passes 0. Set by the CLI's --workers flag.
inline unsigned& default_workers()
{
    static unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    return workers;
}

/// Calls fn(i) for i in [0, count). Each index must write only its own
/// output slot; results are then independent of the worker count.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn, unsigned workers = 0)
{
    if (workers == 0) {
        workers = default_workers();
    }
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            try {
                for (std::size_t i = next++; i < count; i = next++) {
                    fn(i);
                }
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next = count;
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace spheremax

#endif  // SPHEREMAX_PARALLEL_HPP
