#include "consensus_vem/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace cvem {

std::size_t worker_count(std::size_t requested) {
    std::size_t cap = 0;
    if (const char* env = std::getenv("CONSENSUS_VEM_THREADS")) {
        try {
            cap = static_cast<std::size_t>(std::stoul(env));
        } catch (const std::exception&) {
            cap = 0;
        }
    }
    std::size_t workers = requested;
    if (workers == 0) workers = cap != 0 ? cap : std::max(1u, std::thread::hardware_concurrency());
    if (cap != 0) workers = std::min(workers, cap);
    return std::max<std::size_t>(workers, 1);
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body) {
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        threads.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace cvem
