#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "kevo/rng.hpp"
#include "kevo/tensor.hpp"

namespace kevo {

/// Central-difference gradient verification, double precision only.
///
/// `loss` recomputes the scalar objective from the current parameter values;
/// `grad` recomputes and fills every tensor's `grad` analytically. Returns
/// the max over sampled coordinates of
///   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
inline double finite_diff_check(const std::function<double()>& loss,
                                const std::function<void()>& grad,
                                std::vector<TensorD*> params,
                                std::size_t max_samples_per_tensor = 24,
                                double eps = 1e-6,
                                std::uint64_t seed = 7) {
  grad();
  double worst = 0.0;
  SeededRng rng(seed, "gradcheck");
  for (TensorD* t : params) {
    std::vector<std::size_t> coords(t->numel());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (coords.size() > max_samples_per_tensor) {
      // partial Fisher-Yates: sample without replacement
      for (std::size_t i = 0; i < max_samples_per_tensor; ++i) {
        std::size_t j = i + rng.next_below(coords.size() - i);
        std::swap(coords[i], coords[j]);
      }
      coords.resize(max_samples_per_tensor);
    }
    for (std::size_t idx : coords) {
      const double analytic = t->grad[idx];
      const double keep = t->data[idx];
      t->data[idx] = keep + eps;
      const double up = loss();
      t->data[idx] = keep - eps;
      const double down = loss();
      t->data[idx] = keep;
      const double numeric = (up - down) / (2.0 * eps);
      const double rel = std::abs(analytic - numeric) /
                         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace kevo
