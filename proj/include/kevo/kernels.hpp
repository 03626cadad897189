#pragma once

#include <cstddef>

namespace kevo::kernels {

/// Inner-loop kernels behind the float tensor ops. The scalar table is the
/// reference; the AVX2 table must agree with it bitwise for the elementwise
/// kernels (no FMA contraction) and within summation-reorder tolerance for
/// dot. Selection happens once at startup; KEVO_SIMD=scalar|avx2 overrides.
struct Ops {
  const char* name;
  // y[i] += a * x[i]
  void (*axpy)(std::size_t n, float a, const float* x, float* y);
  float (*dot)(std::size_t n, const float* x, const float* y);
  // out[i] = max(x[i], 0)
  void (*relu)(std::size_t n, const float* x, float* out);
  // out[i] = x[i] + y[i]
  void (*add)(std::size_t n, const float* x, const float* y, float* out);
  // v = mu*v + (g + wd*w); w -= lr*v
  void (*sgd_step)(std::size_t n, float lr, float mu, float wd,
                   const float* g, float* v, float* w);
};

const Ops& scalar();
const Ops* avx2();      // nullptr when the CPU lacks AVX2
const Ops& active();    // dispatched table (honors KEVO_SIMD)

/// Intra-op worker cap from KEVO_THREADS (>=1). Ops may parallelize only
/// over disjoint output ranges, so the result is thread-count independent.
int thread_cap();

/// Static-partition parallel for over [0, n). Runs inline when the cap is 1
/// or the range is small.
void parallel_for(std::size_t n, void (*body)(std::size_t, std::size_t, void*),
                  void* ctx);

template <typename F>
void parallel_for(std::size_t n, F&& f) {
  parallel_for(
      n,
      [](std::size_t b, std::size_t e, void* c) {
        (*static_cast<F*>(c))(b, e);
      },
      &f);
}

}  // namespace kevo::kernels
