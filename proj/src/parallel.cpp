#include "nestplan/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace nestplan {

namespace {
std::atomic<std::size_t> g_thread_count{0};
}

void set_thread_count(std::size_t count) { g_thread_count.store(count); }

std::size_t thread_count() {
  const std::size_t configured = g_thread_count.load();
  if (configured != 0) return configured;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t grain) {
  const std::size_t workers = std::min(thread_count(), grain == 0 ? n : (n + grain - 1) / grain);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  const std::size_t chunk = std::max<std::size_t>(1, grain / 4);
  auto run = [&] {
    for (;;) {
      const std::size_t begin = next.fetch_add(chunk);
      if (begin >= n) return;
      const std::size_t end = std::min(n, begin + chunk);
      for (std::size_t i = begin; i < end; ++i) body(i);
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
}

}  // namespace nestplan
