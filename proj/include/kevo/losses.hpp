#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "kevo/tensor.hpp"

namespace kevo {

struct Triplet {
  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;
  bool operator==(const Triplet&) const = default;
};

template <typename T>
struct LossResult {
  T loss;
  TensorT<T> grad;  // d loss / d input of the loss head
};

/// Mean cross-entropy. With smoothing alpha > 0 the target distribution is
/// (1-alpha) * onehot + alpha/C * uniform.
template <typename T>
LossResult<T> cross_entropy(const TensorT<T>& logits,
                            const std::vector<std::size_t>& labels, T alpha) {
  if (logits.shape.size() != 2)
    throw DimensionError("cross_entropy: logits rank != 2");
  const std::size_t N = logits.shape[0], C = logits.shape[1];
  if (labels.size() != N)
    throw DimensionError("cross_entropy: label count != batch");
  LossResult<T> r{T(0), TensorT<T>(logits.shape)};
  const T invN = T(1) / static_cast<T>(N);
  std::vector<T> prob(C);
  for (std::size_t n = 0; n < N; ++n) {
    if (labels[n] >= C)
      throw DimensionError("cross_entropy: label " +
                           std::to_string(labels[n]) + " >= class count " +
                           std::to_string(C));
    const T* row = logits.data.data() + n * C;
    T mx = row[0];
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    T z = T(0);
    for (std::size_t c = 0; c < C; ++c) {
      prob[c] = std::exp(row[c] - mx);
      z += prob[c];
    }
    const T logz = std::log(z) + mx;
    for (std::size_t c = 0; c < C; ++c) {
      prob[c] /= z;
      const T target = (c == labels[n] ? T(1) - alpha : T(0)) +
                       alpha / static_cast<T>(C);
      r.loss += invN * target * (logz - row[c]);
      r.grad.data[n * C + c] = invN * (prob[c] - target);
    }
  }
  return r;
}

/// Row-wise L2 normalization onto the unit sphere.
template <typename T>
TensorT<T> l2_normalize_rows(const TensorT<T>& x) {
  if (x.shape.size() != 2) throw DimensionError("l2_normalize: rank != 2");
  const std::size_t N = x.shape[0], D = x.shape[1];
  TensorT<T> y(x.shape);
  for (std::size_t n = 0; n < N; ++n) {
    const T* xr = x.data.data() + n * D;
    T s = T(0);
    for (std::size_t d = 0; d < D; ++d) s += xr[d] * xr[d];
    const T r = std::sqrt(s);
    const T inv = r > T(0) ? T(1) / r : T(0);
    for (std::size_t d = 0; d < D; ++d) y.data[n * D + d] = xr[d] * inv;
  }
  return y;
}

/// Backward through l2_normalize_rows: gx = (g - e (e.g)) / r.
template <typename T>
TensorT<T> l2_normalize_rows_backward(const TensorT<T>& x,
                                      const TensorT<T>& gy) {
  const std::size_t N = x.shape[0], D = x.shape[1];
  TensorT<T> gx(x.shape);
  for (std::size_t n = 0; n < N; ++n) {
    const T* xr = x.data.data() + n * D;
    const T* gr = gy.data.data() + n * D;
    T s = T(0);
    for (std::size_t d = 0; d < D; ++d) s += xr[d] * xr[d];
    const T r = std::sqrt(s);
    if (!(r > T(0))) continue;
    T eg = T(0);
    for (std::size_t d = 0; d < D; ++d) eg += xr[d] / r * gr[d];
    for (std::size_t d = 0; d < D; ++d)
      gx.data[n * D + d] = (gr[d] - xr[d] / r * eg) / r;
  }
  return gx;
}

template <typename T>
T euclidean_distance(const TensorT<T>& e, std::size_t i, std::size_t j) {
  const std::size_t D = e.shape[1];
  T s = T(0);
  for (std::size_t d = 0; d < D; ++d) {
    const T diff = e.data[i * D + d] - e.data[j * D + d];
    s += diff * diff;
  }
  return std::sqrt(s);
}

/// All anchor-positive pairs, each paired with every semi-hard negative:
/// D_ap < D_an < D_ap + m (strict, true Euclidean distances).
template <typename T>
std::vector<Triplet> mine_semi_hard(const TensorT<T>& embeddings,
                                    const std::vector<std::size_t>& labels,
                                    T margin) {
  const std::size_t N = embeddings.shape[0];
  if (labels.size() != N)
    throw DimensionError("mine_semi_hard: label count != batch");
  std::vector<Triplet> out;
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t p = 0; p < N; ++p) {
      if (p == a || labels[p] != labels[a]) continue;
      const T dap = euclidean_distance(embeddings, a, p);
      for (std::size_t n = 0; n < N; ++n) {
        if (labels[n] == labels[a]) continue;
        const T dan = euclidean_distance(embeddings, a, n);
        if (dap < dan && dan < dap + margin) out.push_back({a, p, n});
      }
    }
  }
  return out;
}

/// Mean hinge over the triplet set: [D_ap - D_an + m]_+ . Empty set gives
/// zero loss and zero gradient.
template <typename T>
LossResult<T> triplet_loss(const TensorT<T>& embeddings,
                           const std::vector<Triplet>& triplets, T margin) {
  const std::size_t D = embeddings.shape[1];
  LossResult<T> r{T(0), TensorT<T>(embeddings.shape)};
  if (triplets.empty()) return r;
  const T inv = T(1) / static_cast<T>(triplets.size());
  for (const Triplet& t : triplets) {
    const T dap = euclidean_distance(embeddings, t.anchor, t.positive);
    const T dan = euclidean_distance(embeddings, t.anchor, t.negative);
    const T h = dap - dan + margin;
    if (h <= T(0)) continue;
    r.loss += inv * h;
    auto push = [&](std::size_t i, std::size_t j, T scale, T dist) {
      if (!(dist > T(0))) return;  // subgradient 0 at coincident points
      for (std::size_t d = 0; d < D; ++d) {
        const T diff = (embeddings.data[i * D + d] -
                        embeddings.data[j * D + d]) /
                       dist;
        r.grad.data[i * D + d] += scale * inv * diff;
        r.grad.data[j * D + d] -= scale * inv * diff;
      }
    };
    push(t.anchor, t.positive, T(1), dap);
    push(t.anchor, t.negative, T(-1), dan);
  }
  return r;
}

}  // namespace kevo
