#include "optmtp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace optmtp {

int worker_count() {
  if (const char* env = std::getenv("OPTMTP_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const int workers = worker_count();
  if (workers <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next(0);
  auto body = [&]() {
    const std::size_t chunk = 16;
    for (;;) {
      const std::size_t start = next.fetch_add(chunk);
      if (start >= count) return;
      const std::size_t end = std::min(count, start + chunk);
      for (std::size_t i = start; i < end; ++i) fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int spawn = std::min<std::size_t>(workers, count) - 1;
  pool.reserve(spawn);
  for (int t = 0; t < spawn; ++t) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
}

}  // namespace optmtp
