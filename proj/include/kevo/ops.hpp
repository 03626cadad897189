#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <type_traits>
#include <vector>

#include "kevo/kernels.hpp"
#include "kevo/tensor.hpp"

namespace kevo::ops {

// ---------------------------------------------------------------------------
// kernel shims: float goes through the dispatched SIMD table, double through
// plain loops (gradient checking runs in double and stays on the reference
// path).

template <typename T>
inline void axpy_t(std::size_t n, T a, const T* x, T* y) {
  if constexpr (std::is_same_v<T, float>) {
    kernels::active().axpy(n, a, x, y);
  } else {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
  }
}

template <typename T>
inline T dot_t(std::size_t n, const T* x, const T* y) {
  if constexpr (std::is_same_v<T, float>) {
    return kernels::active().dot(n, x, y);
  } else {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
  }
}

// ---------------------------------------------------------------------------
// conv2d: input NCHW, filter Co x k x k x Ci, optional bias Co.

inline std::size_t conv_out_dim(std::size_t in, std::size_t k,
                                std::size_t stride, std::size_t pad) {
  if (in + 2 * pad < k)
    throw DimensionError("conv: kernel " + std::to_string(k) +
                         " exceeds padded input " + std::to_string(in + 2 * pad));
  return (in + 2 * pad - k) / stride + 1;
}

template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& x, const TensorT<T>& w,
                          const TensorT<T>* bias, std::size_t stride,
                          std::size_t pad) {
  if (x.shape.size() != 4)
    throw DimensionError("conv: input rank " + std::to_string(x.shape.size()) +
                         " != 4 (NCHW)");
  if (w.shape.size() != 4)
    throw DimensionError("conv: filter rank != 4 (Co x k x k x Ci)");
  const std::size_t N = x.shape[0], C = x.shape[1], H = x.shape[2],
                    W = x.shape[3];
  const std::size_t Co = w.shape[0], K = w.shape[1], Kw = w.shape[2],
                    Ci = w.shape[3];
  if (K != Kw) throw DimensionError("conv: non-square kernel");
  if (C != Ci)
    throw DimensionError("conv: input channel axis " + std::to_string(C) +
                         " != filter Ci " + std::to_string(Ci));
  if (bias && bias->shape != std::vector<std::size_t>{Co})
    throw DimensionError("conv: bias axis != Co " + std::to_string(Co));
  const std::size_t Ho = conv_out_dim(H, K, stride, pad);
  const std::size_t Wo = conv_out_dim(W, K, stride, pad);

  TensorT<T> y({N, Co, Ho, Wo});
  const T* xd = x.data.data();
  const T* wd = w.data.data();
  T* yd = y.data.data();

  kernels::parallel_for(N * Co, [&](std::size_t b, std::size_t e) {
    for (std::size_t nc = b; nc < e; ++nc) {
      const std::size_t n = nc / Co, co = nc % Co;
      T* ybase = yd + (n * Co + co) * Ho * Wo;
      if (bias) {
        const T bv = bias->data[co];
        for (std::size_t i = 0; i < Ho * Wo; ++i) ybase[i] = bv;
      }
      for (std::size_t oh = 0; oh < Ho; ++oh) {
        const long ih0 = static_cast<long>(oh * stride) - static_cast<long>(pad);
        T* yrow = ybase + oh * Wo;
        for (std::size_t kh = 0; kh < K; ++kh) {
          const long ih = ih0 + static_cast<long>(kh);
          if (ih < 0 || ih >= static_cast<long>(H)) continue;
          for (std::size_t kw = 0; kw < K; ++kw) {
            const long off = static_cast<long>(kw) - static_cast<long>(pad);
            const T* wrow = wd + ((co * K + kh) * K + kw) * Ci;
            for (std::size_t ci = 0; ci < Ci; ++ci) {
              const T a = wrow[ci];
              if (a == T(0)) continue;
              const T* xrow = xd + ((n * C + ci) * H + ih) * W;
              if (stride == 1) {
                const long lo = std::max<long>(0, -off);
                const long hi =
                    std::min<long>(Wo, static_cast<long>(W) - off);
                if (hi > lo)
                  axpy_t<T>(hi - lo, a, xrow + lo + off, yrow + lo);
              } else {
                for (std::size_t ow = 0; ow < Wo; ++ow) {
                  const long iw = static_cast<long>(ow * stride) + off;
                  if (iw >= 0 && iw < static_cast<long>(W))
                    yrow[ow] += a * xrow[iw];
                }
              }
            }
          }
        }
      }
    }
  });
  return y;
}

template <typename T>
void conv2d_backward(const TensorT<T>& x, const TensorT<T>& w,
                     std::size_t stride, std::size_t pad, const TensorT<T>& gy,
                     TensorT<T>* gx, TensorT<T>& gw, TensorT<T>* gb) {
  const std::size_t N = x.shape[0], C = x.shape[1], H = x.shape[2],
                    W = x.shape[3];
  const std::size_t Co = w.shape[0], K = w.shape[1], Ci = w.shape[3];
  const std::size_t Ho = gy.shape[2], Wo = gy.shape[3];
  gw.shape = w.shape;
  gw.data.assign(w.numel(), T(0));
  if (gx) {
    gx->shape = x.shape;
    gx->data.assign(x.numel(), T(0));
  }
  if (gb) {
    gb->shape = {Co};
    gb->data.assign(Co, T(0));
  }

  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t co = 0; co < Co; ++co) {
      const T* gybase = gy.data.data() + (n * Co + co) * Ho * Wo;
      if (gb) {
        T acc = T(0);
        for (std::size_t i = 0; i < Ho * Wo; ++i) acc += gybase[i];
        gb->data[co] += acc;
      }
      for (std::size_t oh = 0; oh < Ho; ++oh) {
        const long ih0 = static_cast<long>(oh * stride) - static_cast<long>(pad);
        const T* gyrow = gybase + oh * Wo;
        for (std::size_t kh = 0; kh < K; ++kh) {
          const long ih = ih0 + static_cast<long>(kh);
          if (ih < 0 || ih >= static_cast<long>(H)) continue;
          for (std::size_t kw = 0; kw < K; ++kw) {
            const long off = static_cast<long>(kw) - static_cast<long>(pad);
            T* gwrow = gw.data.data() + ((co * K + kh) * K + kw) * Ci;
            for (std::size_t ci = 0; ci < Ci; ++ci) {
              const T* xrow = x.data.data() + ((n * C + ci) * H + ih) * W;
              T* gxrow =
                  gx ? gx->data.data() + ((n * C + ci) * H + ih) * W : nullptr;
              if (stride == 1) {
                const long lo = std::max<long>(0, -off);
                const long hi =
                    std::min<long>(Wo, static_cast<long>(W) - off);
                if (hi > lo) {
                  gwrow[ci] += dot_t<T>(hi - lo, gyrow + lo, xrow + lo + off);
                  if (gxrow)
                    axpy_t<T>(hi - lo, w.data[((co * K + kh) * K + kw) * Ci + ci],
                              gyrow + lo, gxrow + lo + off);
                }
              } else {
                const T a = w.data[((co * K + kh) * K + kw) * Ci + ci];
                for (std::size_t ow = 0; ow < Wo; ++ow) {
                  const long iw = static_cast<long>(ow * stride) + off;
                  if (iw >= 0 && iw < static_cast<long>(W)) {
                    gwrow[ci] += gyrow[ow] * xrow[iw];
                    if (gxrow) gxrow[iw] += a * gyrow[ow];
                  }
                }
              }
            }
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// batch norm (NCHW, per-channel)

template <typename T>
struct BnParams {
  TensorT<T>* scale;
  TensorT<T>* shift;
  TensorT<T>* running_mean;
  TensorT<T>* running_var;
};

template <typename T>
struct BnAux {
  std::vector<T> mean;   // batch mean used in the forward pass
  std::vector<T> var;    // biased batch variance
};

template <typename T>
TensorT<T> batchnorm_forward(const TensorT<T>& x, const BnParams<T>& p,
                             bool train, T eps, T stat_momentum,
                             BnAux<T>* aux) {
  if (x.shape.size() != 4) throw DimensionError("bn: input rank != 4 (NCHW)");
  const std::size_t N = x.shape[0], C = x.shape[1], H = x.shape[2],
                    W = x.shape[3];
  if (p.scale->shape != std::vector<std::size_t>{C})
    throw DimensionError("bn: channel axis " + std::to_string(C) +
                         " != param size " + std::to_string(p.scale->numel()));
  TensorT<T> y(x.shape);
  const std::size_t plane = H * W;
  const T inv_m = T(1) / static_cast<T>(N * plane);

  std::vector<T> mean(C), var(C);
  if (train) {
    for (std::size_t c = 0; c < C; ++c) {
      T s = T(0);
      for (std::size_t n = 0; n < N; ++n) {
        const T* xr = x.data.data() + (n * C + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) s += xr[i];
      }
      mean[c] = s * inv_m;
      T v = T(0);
      for (std::size_t n = 0; n < N; ++n) {
        const T* xr = x.data.data() + (n * C + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const T d = xr[i] - mean[c];
          v += d * d;
        }
      }
      var[c] = v * inv_m;  // biased; same convention feeds the running stats
      p.running_mean->data[c] =
          (T(1) - stat_momentum) * p.running_mean->data[c] +
          stat_momentum * mean[c];
      p.running_var->data[c] = (T(1) - stat_momentum) * p.running_var->data[c] +
                               stat_momentum * var[c];
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      mean[c] = p.running_mean->data[c];
      var[c] = p.running_var->data[c];
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    const T denom = var[c] + eps;
    if (!(denom > T(0)))
      throw NumericError("bn: non-positive variance + epsilon on channel " +
                         std::to_string(c));
    const T istd = T(1) / std::sqrt(denom);
    const T g = p.scale->data[c] * istd;
    const T b = p.shift->data[c] - g * mean[c];
    for (std::size_t n = 0; n < N; ++n) {
      const T* xr = x.data.data() + (n * C + c) * plane;
      T* yr = y.data.data() + (n * C + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) yr[i] = g * xr[i] + b;
    }
  }
  if (aux) {
    aux->mean = std::move(mean);
    aux->var = std::move(var);
  }
  return y;
}

/// Train-mode backward (batch statistics are functions of the input).
template <typename T>
void batchnorm_backward(const TensorT<T>& x, const BnParams<T>& p,
                        const BnAux<T>& aux, T eps, const TensorT<T>& gy,
                        TensorT<T>& gx, TensorT<T>& gscale,
                        TensorT<T>& gshift) {
  const std::size_t N = x.shape[0], C = x.shape[1], H = x.shape[2],
                    W = x.shape[3];
  const std::size_t plane = H * W;
  const T m = static_cast<T>(N * plane);
  gx.shape = x.shape;
  gx.data.assign(x.numel(), T(0));
  gscale.shape = {C};
  gscale.data.assign(C, T(0));
  gshift.shape = {C};
  gshift.data.assign(C, T(0));
  for (std::size_t c = 0; c < C; ++c) {
    const T istd = T(1) / std::sqrt(aux.var[c] + eps);
    T sum_gy = T(0), sum_gy_xhat = T(0);
    for (std::size_t n = 0; n < N; ++n) {
      const T* xr = x.data.data() + (n * C + c) * plane;
      const T* gr = gy.data.data() + (n * C + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_gy += gr[i];
        sum_gy_xhat += gr[i] * (xr[i] - aux.mean[c]) * istd;
      }
    }
    gshift.data[c] = sum_gy;
    gscale.data[c] = sum_gy_xhat;
    const T g = p.scale->data[c] * istd;
    for (std::size_t n = 0; n < N; ++n) {
      const T* xr = x.data.data() + (n * C + c) * plane;
      const T* gr = gy.data.data() + (n * C + c) * plane;
      T* gxr = gx.data.data() + (n * C + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const T xhat = (xr[i] - aux.mean[c]) * istd;
        gxr[i] = g * (gr[i] - sum_gy / m - xhat * sum_gy_xhat / m);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// linear: input N x Ci, weight Co x Ci, optional bias Co

template <typename T>
TensorT<T> linear_forward(const TensorT<T>& x, const TensorT<T>& w,
                          const TensorT<T>* bias) {
  if (x.shape.size() != 2) throw DimensionError("linear: input rank != 2");
  const std::size_t N = x.shape[0], Ci = x.shape[1];
  if (w.shape.size() != 2 || w.shape[1] != Ci)
    throw DimensionError("linear: weight Ci axis " +
                         std::to_string(w.shape.size() == 2 ? w.shape[1] : 0) +
                         " != input Ci " + std::to_string(Ci));
  const std::size_t Co = w.shape[0];
  if (bias && bias->shape != std::vector<std::size_t>{Co})
    throw DimensionError("linear: bias axis != Co");
  TensorT<T> y({N, Co});
  kernels::parallel_for(N, [&](std::size_t b, std::size_t e) {
    for (std::size_t n = b; n < e; ++n) {
      const T* xr = x.data.data() + n * Ci;
      T* yr = y.data.data() + n * Co;
      for (std::size_t co = 0; co < Co; ++co) {
        T v = dot_t<T>(Ci, xr, w.data.data() + co * Ci);
        if (bias) v += bias->data[co];
        yr[co] = v;
      }
    }
  });
  return y;
}

template <typename T>
void linear_backward(const TensorT<T>& x, const TensorT<T>& w,
                     const TensorT<T>& gy, TensorT<T>* gx, TensorT<T>& gw,
                     TensorT<T>* gb) {
  const std::size_t N = x.shape[0], Ci = x.shape[1], Co = w.shape[0];
  gw.shape = w.shape;
  gw.data.assign(w.numel(), T(0));
  if (gx) {
    gx->shape = x.shape;
    gx->data.assign(x.numel(), T(0));
  }
  if (gb) {
    gb->shape = {Co};
    gb->data.assign(Co, T(0));
  }
  for (std::size_t n = 0; n < N; ++n) {
    const T* xr = x.data.data() + n * Ci;
    const T* gr = gy.data.data() + n * Co;
    for (std::size_t co = 0; co < Co; ++co) {
      const T g = gr[co];
      if (gb) gb->data[co] += g;
      if (g == T(0)) continue;
      axpy_t<T>(Ci, g, xr, gw.data.data() + co * Ci);
      if (gx) axpy_t<T>(Ci, g, w.data.data() + co * Ci,
                        gx->data.data() + n * Ci);
    }
  }
}

// ---------------------------------------------------------------------------
// structural ops

template <typename T>
TensorT<T> relu_forward(const TensorT<T>& x) {
  TensorT<T> y(x.shape);
  if constexpr (std::is_same_v<T, float>) {
    kernels::active().relu(x.numel(), x.data.data(), y.data.data());
  } else {
    for (std::size_t i = 0; i < x.numel(); ++i)
      y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
  }
  return y;
}

template <typename T>
TensorT<T> relu_backward(const TensorT<T>& x, const TensorT<T>& gy) {
  TensorT<T> gx(x.shape);
  for (std::size_t i = 0; i < x.numel(); ++i)
    gx.data[i] = x.data[i] > T(0) ? gy.data[i] : T(0);
  return gx;
}

/// N x C x H x W -> N x C spatial mean.
template <typename T>
TensorT<T> gap_forward(const TensorT<T>& x) {
  if (x.shape.size() != 4) throw DimensionError("gap: input rank != 4");
  const std::size_t N = x.shape[0], C = x.shape[1],
                    plane = x.shape[2] * x.shape[3];
  TensorT<T> y({N, C});
  const T inv = T(1) / static_cast<T>(plane);
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    const T* xr = x.data.data() + nc * plane;
    T s = T(0);
    for (std::size_t i = 0; i < plane; ++i) s += xr[i];
    y.data[nc] = s * inv;
  }
  return y;
}

template <typename T>
TensorT<T> gap_backward(const TensorT<T>& x, const TensorT<T>& gy) {
  const std::size_t N = x.shape[0], C = x.shape[1],
                    plane = x.shape[2] * x.shape[3];
  TensorT<T> gx(x.shape);
  const T inv = T(1) / static_cast<T>(plane);
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    const T g = gy.data[nc] * inv;
    T* gr = gx.data.data() + nc * plane;
    for (std::size_t i = 0; i < plane; ++i) gr[i] = g;
  }
  return gx;
}

template <typename T>
TensorT<T> add_forward(const std::vector<const TensorT<T>*>& xs) {
  if (xs.size() < 2) throw DimensionError("add: needs >= 2 inputs");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i]->shape != xs[0]->shape)
      throw DimensionError("add: operand " + std::to_string(i) + " shape " +
                           xs[i]->shape_str() + " != " + xs[0]->shape_str());
  TensorT<T> y = *xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if constexpr (std::is_same_v<T, float>) {
      kernels::active().add(y.numel(), y.data.data(), xs[i]->data.data(),
                            y.data.data());
    } else {
      for (std::size_t j = 0; j < y.numel(); ++j) y.data[j] += xs[i]->data[j];
    }
  }
  return y;
}

/// Channel-axis concat (axis 1); inputs agree on every other axis.
template <typename T>
TensorT<T> concat_forward(const std::vector<const TensorT<T>*>& xs) {
  if (xs.size() < 2) throw DimensionError("concat: needs >= 2 inputs");
  const auto& s0 = xs[0]->shape;
  if (s0.size() < 2) throw DimensionError("concat: input rank < 2");
  std::size_t ctotal = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto& s = xs[i]->shape;
    if (s.size() != s0.size())
      throw DimensionError("concat: operand rank mismatch");
    for (std::size_t a = 0; a < s.size(); ++a)
      if (a != 1 && s[a] != s0[a])
        throw DimensionError("concat: operand " + std::to_string(i) +
                             " disagrees on axis " + std::to_string(a));
    ctotal += s[1];
  }
  std::vector<std::size_t> oshape = s0;
  oshape[1] = ctotal;
  TensorT<T> y(oshape);
  const std::size_t N = s0[0];
  std::size_t inner = 1;
  for (std::size_t a = 2; a < s0.size(); ++a) inner *= s0[a];
  for (std::size_t n = 0; n < N; ++n) {
    std::size_t coff = 0;
    for (const auto* xp : xs) {
      const std::size_t c = xp->shape[1];
      std::copy_n(xp->data.data() + n * c * inner, c * inner,
                  y.data.data() + (n * ctotal + coff) * inner);
      coff += c;
    }
  }
  return y;
}

template <typename T>
std::vector<TensorT<T>> concat_backward(
    const std::vector<const TensorT<T>*>& xs, const TensorT<T>& gy) {
  std::vector<TensorT<T>> gxs;
  gxs.reserve(xs.size());
  const std::size_t N = xs[0]->shape[0];
  std::size_t inner = 1;
  for (std::size_t a = 2; a < xs[0]->shape.size(); ++a)
    inner *= xs[0]->shape[a];
  const std::size_t ctotal = gy.shape[1];
  std::size_t coff = 0;
  for (const auto* xp : xs) {
    const std::size_t c = xp->shape[1];
    TensorT<T> gx(xp->shape);
    for (std::size_t n = 0; n < N; ++n)
      std::copy_n(gy.data.data() + (n * ctotal + coff) * inner, c * inner,
                  gx.data.data() + n * c * inner);
    coff += c;
    gxs.push_back(std::move(gx));
  }
  return gxs;
}

// ---------------------------------------------------------------------------
// max pool (NCHW); the ResNet18 stem needs one

template <typename T>
TensorT<T> maxpool_forward(const TensorT<T>& x, std::size_t k,
                           std::size_t stride, std::size_t pad,
                           std::vector<std::size_t>* argmax) {
  if (x.shape.size() != 4) throw DimensionError("maxpool: input rank != 4");
  const std::size_t N = x.shape[0], C = x.shape[1], H = x.shape[2],
                    W = x.shape[3];
  const std::size_t Ho = conv_out_dim(H, k, stride, pad);
  const std::size_t Wo = conv_out_dim(W, k, stride, pad);
  TensorT<T> y({N, C, Ho, Wo});
  if (argmax) argmax->assign(y.numel(), 0);
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    const T* xp = x.data.data() + nc * H * W;
    for (std::size_t oh = 0; oh < Ho; ++oh) {
      for (std::size_t ow = 0; ow < Wo; ++ow) {
        T best = -std::numeric_limits<T>::infinity();
        std::size_t bi = 0;
        for (std::size_t kh = 0; kh < k; ++kh) {
          const long ih = static_cast<long>(oh * stride + kh) -
                          static_cast<long>(pad);
          if (ih < 0 || ih >= static_cast<long>(H)) continue;
          for (std::size_t kw = 0; kw < k; ++kw) {
            const long iw = static_cast<long>(ow * stride + kw) -
                            static_cast<long>(pad);
            if (iw < 0 || iw >= static_cast<long>(W)) continue;
            const std::size_t idx = ih * W + iw;
            if (xp[idx] > best) {
              best = xp[idx];
              bi = idx;
            }
          }
        }
        const std::size_t oidx = nc * Ho * Wo + oh * Wo + ow;
        y.data[oidx] = best;
        if (argmax) (*argmax)[oidx] = nc * H * W + bi;
      }
    }
  }
  return y;
}

template <typename T>
TensorT<T> maxpool_backward(const TensorT<T>& x,
                            const std::vector<std::size_t>& argmax,
                            const TensorT<T>& gy) {
  TensorT<T> gx(x.shape);
  for (std::size_t i = 0; i < gy.numel(); ++i) gx.data[argmax[i]] += gy.data[i];
  return gx;
}

}  // namespace kevo::ops
