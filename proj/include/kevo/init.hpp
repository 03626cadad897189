#pragma once

#include <cmath>

#include "kevo/rng.hpp"
#include "kevo/tensor.hpp"

namespace kevo {

/// Rectifier-gain Kaiming uniform: values on [-b, b] with b = sqrt(6/fan_in)
/// (gain sqrt(2) folded into the bound).
inline double kaiming_bound(std::size_t fan_in) {
  if (fan_in == 0) throw DimensionError("kaiming init: fan-in must be > 0");
  return std::sqrt(6.0 / static_cast<double>(fan_in));
}

template <typename T = float>
TensorT<T> kaiming_uniform_init(const std::vector<std::size_t>& shape,
                                std::size_t fan_in, SeededRng& rng) {
  const double b = kaiming_bound(fan_in);
  TensorT<T> t(shape);
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(-b, b));
  return t;
}

/// Fan-in conventions: conv (Co,k,k,Ci) -> Ci*k*k; linear (Co,Ci) -> Ci.
inline std::size_t fan_in_of(const std::vector<std::size_t>& shape) {
  if (shape.size() == 4) return shape[3] * shape[1] * shape[2];
  if (shape.size() == 2) return shape[1];
  if (shape.size() == 1) return shape[0];
  throw DimensionError("fan-in undefined for rank " +
                       std::to_string(shape.size()));
}

}  // namespace kevo
