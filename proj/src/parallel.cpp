#include "icboost/parallel.hpp"

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace icboost {

namespace {

std::atomic<int> g_num_threads{0};

// Chunks below this size are not worth a thread spawn.
constexpr std::size_t kMinChunk = 1024;

}  // namespace

int hardware_threads() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

void set_num_threads(int n) { g_num_threads.store(n < 0 ? 0 : n); }

int num_threads() {
    int n = g_num_threads.load();
    return n == 0 ? hardware_threads() : n;
}

std::size_t parallel_chunk_count(std::size_t n) {
    std::size_t k = static_cast<std::size_t>(num_threads());
    if (k > 1 && n / k < kMinChunk) k = n / kMinChunk == 0 ? 1 : n / kMinChunk;
    if (k < 1) k = 1;
    if (k > n) k = n == 0 ? 1 : n;
    return k;
}

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    std::size_t k = parallel_chunk_count(n);
    if (k == 1) {
        fn(0, n, 0);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(k - 1);
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    auto run_chunk = [&](std::size_t c) {
        std::size_t begin = n * c / k;
        std::size_t end = n * (c + 1) / k;
        try {
            fn(begin, end, c);
        } catch (...) {
            if (!failed.exchange(true)) first_error = std::current_exception();
        }
    };
    for (std::size_t c = 1; c < k; ++c) workers.emplace_back(run_chunk, c);
    run_chunk(0);
    for (auto& w : workers) w.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace icboost
