#include "tentfield/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tentfield {

namespace {
std::atomic<unsigned> g_threads{0};
}

void set_thread_count(unsigned n) { g_threads = n; }

unsigned thread_count() {
  unsigned n = g_threads.load();
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr err;
  std::mutex err_mutex;
  std::vector<std::thread> pool;
  std::size_t block = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t lo = w * block, hi = std::min(n, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace tentfield
