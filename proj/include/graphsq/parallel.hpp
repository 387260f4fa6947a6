#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace graphsq
{
    /// Runs body(k) for k in [0, count) on up to `jobs` threads. Cells must not
    /// share mutable state; the first exception thrown is rethrown.
    template <class Body>
    void parallel_for(std::size_t count, std::size_t jobs, Body&& body)
    {
        jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
        if (jobs == 1)
        {
            for (std::size_t k = 0; k < count; ++k)
                body(k);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        std::vector<std::thread> workers;
        workers.reserve(jobs);
        for (std::size_t w = 0; w < jobs; ++w)
            workers.emplace_back([&] {
                for (std::size_t k = next++; k < count; k = next++)
                {
                    try
                    {
                        body(k);
                    }
                    catch (...)
                    {
                        std::lock_guard lock(error_mutex);
                        if (!error)
                            error = std::current_exception();
                        next = count;
                    }
                }
            });
        for (auto& w : workers)
            w.join();
        if (error)
            std::rethrow_exception(error);
    }
} // namespace graphsq
