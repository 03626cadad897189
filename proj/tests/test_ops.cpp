#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kevo/ops.hpp"
#include "kevo/rng.hpp"

using namespace kevo;
using namespace kevo::ops;

namespace {

Tensor random_tensor(const std::vector<std::size_t>& shape, const char* stream,
                     double lo = -1.0, double hi = 1.0) {
  SeededRng rng(3, stream);
  Tensor t(shape);
  for (auto& v : t.data) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

/// Independent dense convolution: plain quadruple loop over output pixels,
/// no kernel-table fast paths.
Tensor conv_reference(const Tensor& x, const Tensor& w, const Tensor* bias,
                      std::size_t stride, std::size_t pad) {
  const std::size_t N = x.shape[0], C = x.shape[1], H = x.shape[2],
                    W = x.shape[3];
  const std::size_t Co = w.shape[0], K = w.shape[1], Ci = w.shape[3];
  const std::size_t Ho = (H + 2 * pad - K) / stride + 1;
  const std::size_t Wo = (W + 2 * pad - K) / stride + 1;
  Tensor y({N, Co, Ho, Wo});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t co = 0; co < Co; ++co)
      for (std::size_t oh = 0; oh < Ho; ++oh)
        for (std::size_t ow = 0; ow < Wo; ++ow) {
          double acc = bias ? bias->data[co] : 0.0;
          for (std::size_t kh = 0; kh < K; ++kh)
            for (std::size_t kw = 0; kw < K; ++kw)
              for (std::size_t ci = 0; ci < Ci; ++ci) {
                const long ih = static_cast<long>(oh * stride + kh) -
                                static_cast<long>(pad);
                const long iw = static_cast<long>(ow * stride + kw) -
                                static_cast<long>(pad);
                if (ih < 0 || iw < 0 || ih >= static_cast<long>(H) ||
                    iw >= static_cast<long>(W))
                  continue;
                acc += static_cast<double>(
                           w.data[((co * K + kh) * K + kw) * Ci + ci]) *
                       x.data[((n * C + ci) * H + ih) * W + iw];
              }
          y.data[((n * Co + co) * Ho + oh) * Wo + ow] =
              static_cast<float>(acc);
        }
  return y;
}

}  // namespace

TEST_CASE("conv_out_dim follows floor((H+2p-k)/s)+1 and rejects oversize kernels") {
  CHECK(conv_out_dim(224, 7, 2, 3) == 112);
  CHECK(conv_out_dim(8, 3, 1, 1) == 8);
  CHECK(conv_out_dim(5, 3, 2, 0) == 2);
  CHECK_THROWS_AS(conv_out_dim(2, 5, 1, 0), DimensionError);
}

TEST_CASE("conv of all-ones 3x3 input with all-ones 3x3 filter, pad 1: center 9") {
  Tensor x({1, 1, 3, 3});
  Tensor w({1, 3, 3, 1});
  for (auto& v : x.data) v = 1.f;
  for (auto& v : w.data) v = 1.f;
  Tensor y = conv2d_forward<float>(x, w, nullptr, 1, 1);
  CHECK(y.shape == std::vector<std::size_t>{1, 1, 3, 3});
  CHECK(y.data[4] == doctest::Approx(9.f));  // center
  CHECK(y.data[0] == doctest::Approx(4.f));  // corner
  CHECK(y.data[1] == doctest::Approx(6.f));  // edge
}

TEST_CASE("conv with zero filter gives zero output") {
  Tensor x = random_tensor({2, 3, 5, 5}, "zx");
  Tensor w({4, 3, 3, 3});
  Tensor y = conv2d_forward<float>(x, w, nullptr, 1, 1);
  for (float v : y.data) CHECK(v == 0.f);
}

TEST_CASE("conv matches an independent reference for random strides and pads") {
  for (auto [stride, pad] : {std::pair<std::size_t, std::size_t>{1, 0},
                             {1, 1}, {2, 1}, {2, 0}, {3, 2}}) {
    Tensor x = random_tensor({2, 3, 9, 9}, "cx");
    Tensor w = random_tensor({4, 3, 3, 3}, "cw");
    Tensor b = random_tensor({4}, "cb");
    Tensor got = conv2d_forward(x, w, &b, stride, pad);
    Tensor want = conv_reference(x, w, &b, stride, pad);
    REQUIRE(got.shape == want.shape);
    for (std::size_t i = 0; i < got.numel(); ++i)
      CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-4));
  }
}

TEST_CASE("conv rejects channel mismatch naming the axis") {
  Tensor x({1, 2, 4, 4});
  Tensor w({3, 3, 3, 5});
  CHECK_THROWS_WITH_AS(conv2d_forward<float>(x, w, nullptr, 1, 1),
                       doctest::Contains("channel"), DimensionError);
}

TEST_CASE("bn eval with unit running stats is the identity") {
  Tensor x = random_tensor({2, 3, 4, 4}, "bx");
  Tensor scale({3}), shift({3}), rmean({3}), rvar({3});
  for (auto& v : scale.data) v = 1.f;
  for (auto& v : rvar.data) v = 1.f;
  BnParams<float> p{&scale, &shift, &rmean, &rvar};
  Tensor y = batchnorm_forward<float>(x, p, false, 0.f, 0.1f, nullptr);
  for (std::size_t i = 0; i < x.numel(); ++i)
    CHECK(y.data[i] == doctest::Approx(x.data[i]).epsilon(1e-6));
}

TEST_CASE("bn train on constant input reduces to the shift") {
  Tensor x({2, 2, 3, 3});
  for (auto& v : x.data) v = 5.f;
  Tensor scale({2}), shift({2}), rmean({2}), rvar({2});
  scale.data = {2.f, 3.f};
  shift.data = {0.5f, -1.f};
  for (auto& v : rvar.data) v = 1.f;
  BnParams<float> p{&scale, &shift, &rmean, &rvar};
  BnAux<float> aux;
  Tensor y = batchnorm_forward(x, p, true, 1e-5f, 0.1f, &aux);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 9; ++i)
      CHECK(y.data[c * 9 + i] == doctest::Approx(shift.data[c]).epsilon(1e-4));
  // running stats moved toward batch stats: mean 0.9*0 + 0.1*5
  CHECK(rmean.data[0] == doctest::Approx(0.5f));
  CHECK(rvar.data[0] == doctest::Approx(0.9f));  // biased batch var is 0
}

TEST_CASE("bn eval output is invariant to batch composition") {
  Tensor scale({2}), shift({2}), rmean({2}), rvar({2});
  scale.data = {1.2f, 0.8f};
  shift.data = {0.1f, -0.2f};
  rmean.data = {0.3f, -0.1f};
  rvar.data = {1.5f, 0.7f};
  BnParams<float> p{&scale, &shift, &rmean, &rvar};
  Tensor solo = random_tensor({1, 2, 3, 3}, "bi");
  Tensor pair({2, 2, 3, 3});
  std::copy(solo.data.begin(), solo.data.end(), pair.data.begin());
  SeededRng rng(9, "bi2");
  for (std::size_t i = solo.numel(); i < pair.numel(); ++i)
    pair.data[i] = static_cast<float>(rng.uniform(-1, 1));
  Tensor ys = batchnorm_forward<float>(solo, p, false, 1e-5f, 0.1f, nullptr);
  Tensor yp = batchnorm_forward<float>(pair, p, false, 1e-5f, 0.1f, nullptr);
  for (std::size_t i = 0; i < ys.numel(); ++i)
    CHECK(ys.data[i] == yp.data[i]);
}

TEST_CASE("linear with identity weight and zero bias is the identity") {
  Tensor x = random_tensor({3, 4}, "lx");
  Tensor w({4, 4});
  for (std::size_t i = 0; i < 4; ++i) w.data[i * 4 + i] = 1.f;
  Tensor y = linear_forward<float>(x, w, nullptr);
  for (std::size_t i = 0; i < x.numel(); ++i)
    CHECK(y.data[i] == doctest::Approx(x.data[i]));
}

TEST_CASE("linear with zero weight broadcasts the bias") {
  Tensor x = random_tensor({3, 4}, "lz");
  Tensor w({2, 4});
  Tensor b({2});
  b.data = {1.5f, -2.f};
  Tensor y = linear_forward(x, w, &b);
  for (std::size_t n = 0; n < 3; ++n) {
    CHECK(y.data[n * 2 + 0] == 1.5f);
    CHECK(y.data[n * 2 + 1] == -2.f);
  }
}

TEST_CASE("relu clamps negatives") {
  Tensor x({3});
  x.data = {-1.f, 0.f, 2.f};
  Tensor y = relu_forward(x);
  CHECK(y.data == std::vector<float>{0.f, 0.f, 2.f});
}

TEST_CASE("gap of a constant channel is that constant") {
  Tensor x({1, 2, 4, 4});
  for (std::size_t i = 0; i < 16; ++i) x.data[i] = 3.f;
  for (std::size_t i = 16; i < 32; ++i) x.data[i] = -1.f;
  Tensor y = gap_forward(x);
  CHECK(y.shape == std::vector<std::size_t>{1, 2});
  CHECK(y.data[0] == doctest::Approx(3.f));
  CHECK(y.data[1] == doctest::Approx(-1.f));
}

TEST_CASE("add sums elementwise and rejects shape mismatch") {
  Tensor a = random_tensor({2, 3, 2, 2}, "aa");
  Tensor b = random_tensor({2, 3, 2, 2}, "ab");
  Tensor y = add_forward<float>({&a, &b});
  for (std::size_t i = 0; i < y.numel(); ++i)
    CHECK(y.data[i] == doctest::Approx(a.data[i] + b.data[i]));
  Tensor c({2, 4, 2, 2});
  CHECK_THROWS_AS((add_forward<float>({&a, &c})), DimensionError);
}

TEST_CASE("concat stacks channels in argument order") {
  Tensor a({1, 2, 2, 2});
  Tensor b({1, 3, 2, 2});
  for (auto& v : a.data) v = 1.f;
  for (auto& v : b.data) v = 2.f;
  Tensor y = concat_forward<float>({&a, &b});
  CHECK(y.shape == std::vector<std::size_t>{1, 5, 2, 2});
  for (std::size_t i = 0; i < 8; ++i) CHECK(y.data[i] == 1.f);
  for (std::size_t i = 8; i < 20; ++i) CHECK(y.data[i] == 2.f);
}

TEST_CASE("maxpool picks window maxima and routes gradient to the argmax") {
  Tensor x({1, 1, 4, 4});
  for (std::size_t i = 0; i < 16; ++i) x.data[i] = static_cast<float>(i);
  std::vector<std::size_t> argmax;
  Tensor y = maxpool_forward(x, 2, 2, 0, &argmax);
  CHECK(y.shape == std::vector<std::size_t>{1, 1, 2, 2});
  CHECK(y.data == std::vector<float>{5.f, 7.f, 13.f, 15.f});
  Tensor gy(y.shape);
  gy.data = {1.f, 2.f, 3.f, 4.f};
  Tensor gx = maxpool_backward(x, argmax, gy);
  CHECK(gx.data[5] == 1.f);
  CHECK(gx.data[7] == 2.f);
  CHECK(gx.data[13] == 3.f);
  CHECK(gx.data[15] == 4.f);
  float total = 0.f;
  for (float v : gx.data) total += v;
  CHECK(total == 10.f);
}

TEST_CASE("all engine outputs stay finite on random inputs") {
  Tensor x = random_tensor({2, 3, 6, 6}, "fx", -3.0, 3.0);
  Tensor w = random_tensor({4, 3, 3, 3}, "fw", -3.0, 3.0);
  Tensor y = conv2d_forward<float>(x, w, nullptr, 1, 1);
  CHECK(all_finite(y));
}
