#include "rgexpect/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace rgexpect {

int thread_count() {
    static const int n = [] {
        if (const char* env = std::getenv("RGEXPECT_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v > 0) return static_cast<int>(v);
        }
        const unsigned hw = std::thread::hardware_concurrency();
        return hw ? static_cast<int>(hw) : 1;
    }();
    return n;
}

namespace {
thread_local bool t_inside_worker = false;
}

void parallel_for(std::uint64_t n, const std::function<void(std::uint64_t)>& fn) {
    if (n == 0) return;
    const int workers = static_cast<int>(
        std::min<std::uint64_t>(static_cast<std::uint64_t>(thread_count()), n));
    // nested calls run inline; only the outermost loop fans out
    if (workers <= 1 || t_inside_worker) {
        for (std::uint64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto body = [&] {
        t_inside_worker = true;
        for (;;) {
            const std::uint64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n || failed.load(std::memory_order_relaxed)) break;
            try {
                fn(i);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
                break;
            }
        }
        t_inside_worker = false;
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
    if (failed.load()) std::rethrow_exception(error);
}

} // namespace rgexpect
