#pragma once

#include <cstddef>
#include <cstdint>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "kevo/error.hpp"

namespace kevo {

/// Dense row-major tensor. `grad` is either empty (absent) or data-sized.
/// Training runs on float; gradient checking instantiates the double variant.
template <typename T>
struct TensorT {
  std::vector<std::size_t> shape;
  std::vector<T> data;
  std::vector<T> grad;

  TensorT() = default;
  explicit TensorT(std::vector<std::size_t> s, T fill = T(0))
      : shape(std::move(s)), data(numel_of(shape), fill) {}

  static std::size_t numel_of(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return s.empty() ? 0 : n;
  }

  std::size_t numel() const { return data.size(); }
  bool has_grad() const { return !grad.empty(); }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
  void zero_grad() { grad.assign(data.size(), T(0)); }

  T& at(std::size_t i) { return data[i]; }
  const T& at(std::size_t i) const { return data[i]; }

  std::size_t dim(std::size_t i) const {
    if (i >= shape.size())
      throw DimensionError("tensor axis " + std::to_string(i) +
                           " out of rank " + std::to_string(shape.size()));
    return shape[i];
  }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i)
      os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
  }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <typename T>
inline void require_shape(const TensorT<T>& t,
                          const std::vector<std::size_t>& want,
                          const std::string& what) {
  if (t.shape != want) {
    TensorT<T> w;
    w.shape = want;
    throw DimensionError(what + ": expected shape " + w.shape_str() +
                         ", got " + t.shape_str());
  }
}

template <typename T>
inline bool all_finite(const TensorT<T>& t) {
  for (T v : t.data)
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

}  // namespace kevo
