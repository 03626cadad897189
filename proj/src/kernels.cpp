#include "kevo/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <thread>
#include <vector>

namespace kevo::kernels {

const Ops& active() {
  static const Ops* chosen = [] {
    const char* env = std::getenv("KEVO_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return &scalar();
    if (env && std::strcmp(env, "avx2") == 0 && avx2()) return avx2();
    if (const Ops* v = avx2()) return v;
    return &scalar();
  }();
  return *chosen;
}

int thread_cap() {
  static int cap = [] {
    const char* env = std::getenv("KEVO_THREADS");
    if (!env) return 1;
    int v = std::atoi(env);
    return v >= 1 ? v : 1;
  }();
  return cap;
}

void parallel_for(std::size_t n, void (*body)(std::size_t, std::size_t, void*),
                  void* ctx) {
  const int cap = thread_cap();
  if (cap <= 1 || n < 2) {
    body(0, n, ctx);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(cap, n);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([=] { body(b, e, ctx); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace kevo::kernels
