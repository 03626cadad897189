#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "kevo/kernels.hpp"
#include "kevo/rng.hpp"

using namespace kevo;

namespace {

std::vector<float> random_vec(std::size_t n, const char* stream) {
  SeededRng rng(11, stream);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-2.0, 2.0));
  return v;
}

bool bitwise_equal(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("scalar table is always available") {
  const auto& s = kernels::scalar();
  CHECK(std::string(s.name) == "scalar");
  CHECK(s.axpy != nullptr);
  CHECK(s.dot != nullptr);
}

TEST_CASE("axpy matches hand result") {
  std::vector<float> x = {1.f, 2.f, 3.f};
  std::vector<float> y = {10.f, 10.f, 10.f};
  kernels::scalar().axpy(3, 2.f, x.data(), y.data());
  CHECK(y == std::vector<float>{12.f, 14.f, 16.f});
}

TEST_CASE("dot matches hand result") {
  std::vector<float> x = {1.f, 2.f, 3.f};
  std::vector<float> y = {4.f, 5.f, 6.f};
  CHECK(kernels::scalar().dot(3, x.data(), y.data()) == doctest::Approx(32.f));
}

TEST_CASE("sgd_step implements v <- mu v + (g + wd w); w -= lr v") {
  // two steps on a scalar: w=1, g=1, mu=0.9, wd=0, lr=0.1 -> 0.71
  float w = 1.f, v = 0.f, g = 1.f;
  kernels::scalar().sgd_step(1, 0.1f, 0.9f, 0.f, &g, &v, &w);
  kernels::scalar().sgd_step(1, 0.1f, 0.9f, 0.f, &g, &v, &w);
  CHECK(w == doctest::Approx(0.71f).epsilon(1e-6));

  // weight decay alone: w=1, g=0, wd=1e-4, lr=1 -> 1 - 1e-4
  w = 1.f;
  v = 0.f;
  g = 0.f;
  kernels::scalar().sgd_step(1, 1.f, 0.9f, 1e-4f, &g, &v, &w);
  CHECK(w == doctest::Approx(1.f - 1e-4f).epsilon(1e-9));
}

TEST_CASE("avx2 elementwise kernels agree with scalar bitwise when present") {
  const kernels::Ops* v = kernels::avx2();
  if (!v) return;  // host lacks AVX2; dispatch falls back to scalar
  for (std::size_t n : {1u, 7u, 8u, 31u, 256u, 1000u}) {
    auto x = random_vec(n, "x");
    auto ys = random_vec(n, "y");
    auto yv = ys;
    kernels::scalar().axpy(n, 1.37f, x.data(), ys.data());
    v->axpy(n, 1.37f, x.data(), yv.data());
    CHECK(bitwise_equal(ys, yv));

    std::vector<float> rs(n), rv(n);
    kernels::scalar().relu(n, x.data(), rs.data());
    v->relu(n, x.data(), rv.data());
    CHECK(bitwise_equal(rs, rv));

    auto y2 = random_vec(n, "y2");
    std::vector<float> as(n), av(n);
    kernels::scalar().add(n, x.data(), y2.data(), as.data());
    v->add(n, x.data(), y2.data(), av.data());
    CHECK(bitwise_equal(as, av));

    auto ws = random_vec(n, "w");
    auto wv = ws;
    std::vector<float> vs(n, 0.f), vv(n, 0.f);
    kernels::scalar().sgd_step(n, 0.1f, 0.9f, 1e-4f, x.data(), vs.data(),
                               ws.data());
    v->sgd_step(n, 0.1f, 0.9f, 1e-4f, x.data(), vv.data(), wv.data());
    CHECK(bitwise_equal(ws, wv));
    CHECK(bitwise_equal(vs, vv));
  }
}

TEST_CASE("avx2 dot agrees with scalar within summation-reorder tolerance") {
  const kernels::Ops* v = kernels::avx2();
  if (!v) return;
  for (std::size_t n : {1u, 9u, 64u, 1000u, 4096u}) {
    auto x = random_vec(n, "dx");
    auto y = random_vec(n, "dy");
    const double s = kernels::scalar().dot(n, x.data(), y.data());
    const double a = v->dot(n, x.data(), y.data());
    CHECK(std::abs(s - a) <= 1e-3 * (1.0 + std::abs(s)));
  }
}

TEST_CASE("active table honors KEVO_SIMD and is one of the two tables") {
  const auto& a = kernels::active();
  const std::string name = a.name;
  CHECK((name == "scalar" || name == "avx2"));
}

TEST_CASE("parallel_for covers the range exactly once for any thread cap") {
  std::vector<int> hits(1000, 0);
  kernels::parallel_for(hits.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) hits[i] += 1;
  });
  for (int h : hits) CHECK(h == 1);
}
