#include "eo2sar/threading.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace eo2sar {

namespace {

std::atomic<int> g_cap{0};

int detect_threads() {
    if (const char* env = std::getenv("EO2SAR_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

}  // namespace

int max_threads() {
    int cap = g_cap.load(std::memory_order_relaxed);
    return cap >= 1 ? cap : detect_threads();
}

void set_max_threads(int n) { g_cap.store(n >= 1 ? n : 0, std::memory_order_relaxed); }

void parallel_for(int64_t n, const std::function<void(int64_t)>& body) {
    if (n <= 0) return;
    int workers = max_threads();
    if (workers > n) workers = static_cast<int>(n);
    if (workers <= 1) {
        for (int64_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers - 1));
    auto run_chunk = [&](int w) {
        int64_t begin = n * w / workers;
        int64_t end = n * (w + 1) / workers;
        for (int64_t i = begin; i < end; ++i) body(i);
    };
    for (int w = 1; w < workers; ++w) pool.emplace_back(run_chunk, w);
    run_chunk(0);
    for (auto& t : pool) t.join();
}

}  // namespace eo2sar
