#include "kevo/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace kevo::kernels {
namespace {

// Explicit mul+add (no FMA) so lane results are bitwise identical to the
// scalar reference; only dot's summation order differs.

void axpy_v(std::size_t n, float a, const float* x, float* y) {
  const __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vy = _mm256_loadu_ps(y + i);
    __m256 vx = _mm256_loadu_ps(x + i);
    vy = _mm256_add_ps(vy, _mm256_mul_ps(va, vx));
    _mm256_storeu_ps(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

float dot_v(std::size_t n, const float* x, const float* y) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc = _mm256_add_ps(acc,
                        _mm256_mul_ps(_mm256_loadu_ps(x + i),
                                      _mm256_loadu_ps(y + i)));
  }
  __m128 lo = _mm256_castps256_ps128(acc);
  __m128 hi = _mm256_extractf128_ps(acc, 1);
  __m128 s = _mm_add_ps(lo, hi);
  s = _mm_add_ps(s, _mm_movehl_ps(s, s));
  s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 1));
  float out = _mm_cvtss_f32(s);
  for (; i < n; ++i) out += x[i] * y[i];
  return out;
}

void relu_v(std::size_t n, const float* x, float* out) {
  const __m256 z = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_max_ps(_mm256_loadu_ps(x + i), z));
  for (; i < n; ++i) out[i] = x[i] > 0.f ? x[i] : 0.f;
}

void add_v(std::size_t n, const float* x, const float* y, float* out) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(x + i),
                                            _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void sgd_v(std::size_t n, float lr, float mu, float wd, const float* g,
           float* v, float* w) {
  const __m256 vmu = _mm256_set1_ps(mu);
  const __m256 vwd = _mm256_set1_ps(wd);
  const __m256 vlr = _mm256_set1_ps(lr);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vw = _mm256_loadu_ps(w + i);
    __m256 vv = _mm256_loadu_ps(v + i);
    __m256 vg = _mm256_loadu_ps(g + i);
    vv = _mm256_add_ps(_mm256_mul_ps(vmu, vv),
                       _mm256_add_ps(vg, _mm256_mul_ps(vwd, vw)));
    vw = _mm256_sub_ps(vw, _mm256_mul_ps(vlr, vv));
    _mm256_storeu_ps(v + i, vv);
    _mm256_storeu_ps(w + i, vw);
  }
  for (; i < n; ++i) {
    v[i] = mu * v[i] + (g[i] + wd * w[i]);
    w[i] -= lr * v[i];
  }
}

}  // namespace

const Ops* avx2() {
  static const Ops table{"avx2", axpy_v, dot_v, relu_v, add_v, sgd_v};
  if (__builtin_cpu_supports("avx2")) return &table;
  return nullptr;
}

}  // namespace kevo::kernels

#else

namespace kevo::kernels {
const Ops* avx2() { return nullptr; }
}  // namespace kevo::kernels

#endif
