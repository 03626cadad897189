#pragma once

#include <map>
#include <string>
#include <vector>

#include "kevo/graph.hpp"
#include "kevo/ops.hpp"

namespace kevo {

inline constexpr float kBnEps = 1e-5f;
inline constexpr float kBnStatMomentum = 0.1f;

enum class RunMode { Train, Eval };

/// Saved activations and per-node auxiliaries from a forward pass, kept
/// around for backward.
struct ForwardTrace {
  std::map<std::string, Tensor> acts;
  std::map<std::string, ops::BnAux<float>> bn_aux;
  std::map<std::string, std::vector<std::size_t>> pool_argmax;
};

/// Executes nodes in topological order. Train mode uses batch statistics and
/// updates running stats in `params`; eval mode is a pure function of
/// (params, input).
Tensor forward(const NetworkGraph& g, ParamSet& params, const Tensor& x,
               RunMode mode, ForwardTrace* trace = nullptr);

/// Gradient per parameter tensor, keyed like ParamSet.
using GradMap = std::map<std::string, std::vector<float>>;

/// Reverse pass over a train-mode trace. `dout` matches the output shape.
GradMap backward(const NetworkGraph& g, const ParamSet& params,
                 const ForwardTrace& trace, const Tensor& x,
                 const Tensor& dout);

}  // namespace kevo
