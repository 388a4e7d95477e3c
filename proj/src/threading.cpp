#include "advsticker/threading.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace advsticker {

int max_threads() {
  static const int cap = [] {
    const char* env = std::getenv("ADVSTICKER_THREADS");
    if (env) {
      const long v = std::strtol(env, nullptr, 10);
      if (v <= 0) return 1;  // 0 = serial
      return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return cap;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const int threads = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(max_threads()), n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        body(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace advsticker
