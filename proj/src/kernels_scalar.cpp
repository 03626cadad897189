#include "kevo/kernels.hpp"

namespace kevo::kernels {
namespace {

void axpy_s(std::size_t n, float a, const float* x, float* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

float dot_s(std::size_t n, const float* x, const float* y) {
  float acc = 0.f;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void relu_s(std::size_t n, const float* x, float* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.f ? x[i] : 0.f;
}

void add_s(std::size_t n, const float* x, const float* y, float* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void sgd_s(std::size_t n, float lr, float mu, float wd, const float* g,
           float* v, float* w) {
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = mu * v[i] + (g[i] + wd * w[i]);
    w[i] -= lr * v[i];
  }
}

}  // namespace

const Ops& scalar() {
  static const Ops table{"scalar", axpy_s, dot_s, relu_s, add_s, sgd_s};
  return table;
}

}  // namespace kevo::kernels
