#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wsob
{

namespace detail
{
inline std::atomic<int>& thread_setting()
{
    static std::atomic<int> n{1};
    return n;
}
}// namespace detail

// number of worker threads used by parallel loops (>= 1)
inline int thread_count() { return detail::thread_setting().load(); }

inline void set_thread_count(int n) { detail::thread_setting().store(std::max(1, n)); }

//
// Calls body(i) for i in [0, count). Work is handed out in fixed chunks, so any
// per-index output written by body is independent of the thread count.
//
template <class Body>
void parallel_for(std::size_t count, Body&& body, std::size_t chunk = 256)
{
    const auto nthreads = static_cast<std::size_t>(thread_count());
    if (nthreads <= 1 || count <= chunk) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }

    const std::size_t nchunks = (count + chunk - 1) / chunk;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (std::size_t c = next++; c < nchunks; c = next++) {
            try {
                const std::size_t end = std::min(count, (c + 1) * chunk);
                for (std::size_t i = c * chunk; i < end; ++i)
                    body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = nchunks;
            }
        }
    };

    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < std::min(nthreads, nchunks); ++t)
        pool.emplace_back(worker);
    worker();
    pool.clear();

    if (failure)
        std::rethrow_exception(failure);
}

//
// Sum of term(i) over [0, count). Partial sums are formed per fixed-size chunk
// and combined in chunk order, so the result is bitwise reproducible for any
// thread count.
//
template <class Term>
double parallel_sum(std::size_t count, Term&& term, std::size_t chunk = 1024)
{
    const std::size_t nchunks = (count + chunk - 1) / chunk;
    std::vector<double> partial(nchunks, 0.0);
    parallel_for(
        nchunks,
        [&](std::size_t c) {
            const std::size_t end = std::min(count, (c + 1) * chunk);
            double s = 0.0;
            for (std::size_t i = c * chunk; i < end; ++i)
                s += term(i);
            partial[c] = s;
        },
        1);
    double total = 0.0;
    for (double s : partial)
        total += s;
    return total;
}

}// namespace wsob
