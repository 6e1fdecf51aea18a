// SPDX-License-Identifier: Apache-2.0
#include "csinas/parallel.hpp"

#include <atomic>
#include <stdexcept>
#include <thread>
#include <vector>

namespace csinas {

namespace {
int g_threads = 0;
}

void set_engine_threads(int n) {
  if (n < 0) throw std::runtime_error("set_engine_threads: negative thread count");
  g_threads = n;
}

int engine_threads() {
  if (g_threads > 0) return g_threads;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(int64_t n, int64_t grain, const std::function<void(int64_t, int64_t)>& body) {
  if (n <= 0) return;
  if (grain < 1) grain = 1;
  int workers = engine_threads();
  if (workers <= 1 || n <= grain) {
    body(0, n);
    return;
  }
  int64_t chunks = (n + grain - 1) / grain;
  std::atomic<int64_t> next{0};
  auto run = [&] {
    for (;;) {
      int64_t c = next.fetch_add(1);
      if (c >= chunks) break;
      int64_t b = c * grain;
      int64_t e = b + grain < n ? b + grain : n;
      body(b, e);
    }
  };
  int spawn = workers - 1;
  if (chunks < workers) spawn = static_cast<int>(chunks) - 1;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(spawn));
  for (int i = 0; i < spawn; ++i) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
}

}  // namespace csinas
