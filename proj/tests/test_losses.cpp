#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "kevo/losses.hpp"
#include "kevo/rng.hpp"

using namespace kevo;

namespace {

TensorD random_embeddings(std::size_t n, std::size_t d, const char* stream) {
  SeededRng rng(31, stream);
  TensorD t({n, d});
  for (auto& v : t.data) v = rng.uniform(-1.0, 1.0);
  return l2_normalize_rows(t);
}

std::vector<std::size_t> random_labels(std::size_t n, std::size_t classes,
                                       const char* stream) {
  SeededRng rng(37, stream);
  std::vector<std::size_t> l(n);
  for (auto& v : l) v = rng.next_below(classes);
  return l;
}

}  // namespace

TEST_CASE("cross-entropy of uniform logits over 4 classes is ln 4") {
  TensorD logits({3, 4});
  const std::vector<std::size_t> labels = {0, 1, 3};
  auto r = cross_entropy(logits, labels, 0.0);
  CHECK(r.loss == doctest::Approx(std::log(4.0)).epsilon(1e-9));
}

TEST_CASE("cross-entropy of a dominant true logit tends to zero at alpha 0") {
  TensorD logits({1, 3});
  logits.data = {50.0, 0.0, 0.0};
  auto r = cross_entropy(logits, {0}, 0.0);
  CHECK(r.loss < 1e-9);
  // and stays positive with smoothing (mixing penalty)
  auto rs = cross_entropy(logits, {0}, 0.1);
  CHECK(rs.loss > 0.0);
}

TEST_CASE("smoothed cross-entropy equals a hand-evaluated scalar oracle") {
  // C = 2, logits (1, 0), label 0, alpha = 0.1:
  // p = (e / (e+1), 1 / (e+1)); targets (0.95, 0.05)
  TensorD logits({1, 2});
  logits.data = {1.0, 0.0};
  auto r = cross_entropy(logits, {0}, 0.1);
  const double z = std::exp(1.0) + 1.0;
  const double want =
      0.95 * (std::log(z) - 1.0) + 0.05 * std::log(z);
  CHECK(r.loss == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("cross-entropy gradient rows sum to zero") {
  TensorD logits = random_embeddings(5, 6, "ce");
  auto r = cross_entropy(logits, random_labels(5, 6, "cl"), 0.1);
  for (std::size_t n = 0; n < 5; ++n) {
    double s = 0.0;
    for (std::size_t c = 0; c < 6; ++c) s += r.grad.data[n * 6 + c];
    CHECK(std::abs(s) < 1e-12);
  }
}

TEST_CASE("l2 normalization puts rows on the unit sphere") {
  TensorD x = random_embeddings(7, 5, "l2");
  for (std::size_t n = 0; n < 7; ++n) {
    double s = 0.0;
    for (std::size_t d = 0; d < 5; ++d) s += x.data[n * 5 + d] * x.data[n * 5 + d];
    CHECK(std::sqrt(s) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("identical points mine no triplets (strict inequality)") {
  TensorD e({4, 3});
  for (std::size_t n = 0; n < 4; ++n) e.data[n * 3] = 1.0;
  CHECK(mine_semi_hard(e, {0, 0, 1, 1}, 0.2).empty());
}

TEST_CASE("hand-built set mines exactly the negative inside the margin band") {
  // anchor-positive distance 0.2; negatives at 0.3 (semi-hard) and 0.8 (easy)
  TensorD e({4, 2});
  e.data = {0.0, 0.0,   // a (class 0)
            0.2, 0.0,   // p (class 0)
            0.3, 0.0,   // semi-hard negative (class 1)
            0.8, 0.0};  // easy negative (class 1)
  const std::vector<std::size_t> labels = {0, 0, 1, 1};
  auto t = mine_semi_hard(e, labels, 0.2);
  // ordered (a,p) pairs: (0,1) has D_ap=0.2 < D_an(2)=0.3 < 0.4 -> mined;
  // (1,0) has D_ap=0.2, D_an(2)=0.1 -> hard, excluded; 0.8 beyond band.
  // class 1: (3,2) has D_ap=0.5 and D_an(1)=0.6 inside (0.5, 0.7) -> mined;
  // (2,3) sees only hard negatives at 0.1 and 0.3.
  REQUIRE(t.size() == 2);
  CHECK(t[0] == Triplet{0, 1, 2});
  CHECK(t[1] == Triplet{3, 2, 1});
}

TEST_CASE("mining equals exhaustive enumeration on random batches") {
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 4 + trial * 3;
    TensorD e = random_embeddings(n, 8, ("m" + std::to_string(trial)).c_str());
    auto labels = random_labels(n, 4, ("ml" + std::to_string(trial)).c_str());
    const double m = 0.3;
    auto got = mine_semi_hard(e, labels, m);
    std::vector<Triplet> want;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t neg = 0; neg < n; ++neg) {
          if (a == p || labels[a] != labels[p] || labels[neg] == labels[a])
            continue;
          double dap = 0.0, dan = 0.0;
          for (std::size_t d = 0; d < 8; ++d) {
            dap += (e.data[a * 8 + d] - e.data[p * 8 + d]) *
                   (e.data[a * 8 + d] - e.data[p * 8 + d]);
            dan += (e.data[a * 8 + d] - e.data[neg * 8 + d]) *
                   (e.data[a * 8 + d] - e.data[neg * 8 + d]);
          }
          dap = std::sqrt(dap);
          dan = std::sqrt(dan);
          if (dap < dan && dan < dap + m) want.push_back({a, p, neg});
        }
    CHECK(got.size() == want.size());
    CHECK(std::is_permutation(got.begin(), got.end(), want.begin(),
                              want.end()));
  }
}

TEST_CASE("triplet hinge values follow the margin arithmetic") {
  // place three points on a line with controlled distances
  TensorD e({3, 2});
  SUBCASE("inactive hinge: D_ap=0.5, D_an=0.9, m=0.2") {
    e.data = {0.0, 0.0, 0.5, 0.0, 0.9, 0.0};
    auto r = triplet_loss(e, {{0, 1, 2}}, 0.2);
    CHECK(r.loss == doctest::Approx(0.0));
    for (double v : r.grad.data) CHECK(v == 0.0);
  }
  SUBCASE("tie: D_ap=D_an gives exactly the margin") {
    e.data = {0.0, 0.0, 0.5, 0.0, -0.5, 0.0};
    auto r = triplet_loss(e, {{0, 1, 2}}, 0.2);
    CHECK(r.loss == doctest::Approx(0.2));
  }
}

TEST_CASE("empty triplet set gives zero loss and zero gradient") {
  TensorD e = random_embeddings(4, 3, "te");
  auto r = triplet_loss(e, {}, 0.2);
  CHECK(r.loss == 0.0);
  for (double v : r.grad.data) CHECK(v == 0.0);
}
