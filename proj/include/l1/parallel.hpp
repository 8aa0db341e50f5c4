#pragma once
// Minimal worker pool over an index range. The thread cap comes from the
// L1LAB_THREADS environment variable (default: hardware concurrency).

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace l1 {

inline int thread_cap() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* s = std::getenv("L1LAB_THREADS")) {
        const int v = std::atoi(s);
        if (v > 0) return std::min(v, hw);
    }
    return hw;
}

template <class F>
void parallel_for(int n, F&& fn) {
    const int nt = std::min(thread_cap(), n);
    if (nt <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex m;
    std::vector<std::thread> pool;
    for (int w = 0; w < nt; ++w)
        pool.emplace_back([&] {
            for (int i; (i = next.fetch_add(1)) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> g(m);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace l1
