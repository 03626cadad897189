#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "kevo/kernels.hpp"
#include "kevo/tensor.hpp"

namespace kevo {

/// SGD with momentum: v <- mu*v + (g + wd*w); w <- w - lr*v.
/// Weight decay applies to every parameter tensor, batch-norm scale/shift
/// and biases included.
class SgdMomentum {
 public:
  SgdMomentum(float momentum = 0.9f, float weight_decay = 1e-4f)
      : momentum_(momentum), weight_decay_(weight_decay) {}

  void step(const std::string& name, Tensor& param,
            const std::vector<float>& grad, float lr) {
    if (grad.size() != param.numel())
      throw DimensionError("sgd: gradient size mismatch for " + name);
    for (float g : grad)
      if (!std::isfinite(g))
        throw NumericError("sgd: non-finite gradient in " + name);
    auto& v = velocity_[name];
    if (v.size() != param.numel()) v.assign(param.numel(), 0.f);
    kernels::active().sgd_step(param.numel(), lr, momentum_, weight_decay_,
                               grad.data(), v.data(), param.data.data());
  }

  void reset() { velocity_.clear(); }

  float momentum() const { return momentum_; }
  float weight_decay() const { return weight_decay_; }
  const std::map<std::string, std::vector<float>>& velocity() const {
    return velocity_;
  }

 private:
  float momentum_;
  float weight_decay_;
  std::map<std::string, std::vector<float>> velocity_;
};

/// Cosine decay without restarts inside a generation:
/// lr(epoch) = lr0 * 0.5 * (1 + cos(pi * epoch / total)).
inline double cosine_lr(int epoch, int total_epochs, double lr0) {
  if (total_epochs <= 0)
    throw ConfigError("cosine_lr: total epochs must be positive");
  if (epoch < 0 || epoch > total_epochs)
    throw ConfigError("cosine_lr: epoch out of range");
  constexpr double kPi = 3.14159265358979323846;
  return lr0 * 0.5 *
         (1.0 + std::cos(kPi * static_cast<double>(epoch) /
                         static_cast<double>(total_epochs)));
}

}  // namespace kevo
