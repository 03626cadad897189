#pragma once

#include <map>
#include <string>
#include <vector>

#include "kevo/tensor.hpp"

namespace kevo {

enum class LayerKind {
  Input,
  Conv,
  BatchNorm,
  Linear,
  ReLU,
  Gap,
  Add,
  Concat,
  MaxPool,
};

const char* kind_name(LayerKind k);

struct LayerNode {
  std::string name;
  LayerKind kind = LayerKind::Input;
  std::vector<std::string> preds;

  // Conv: co, ci, k, stride, pad, bias. Linear: co, ci, bias.
  // BatchNorm: c. Input: c, h, w. MaxPool: k, stride, pad.
  std::size_t co = 0, ci = 0, k = 0, stride = 1, pad = 0;
  std::size_t c = 0, h = 0, w = 0;
  bool bias = false;
};

/// Per-sample activation shape: {C,H,W} for maps, {C} after GAP/Linear.
using NodeShape = std::vector<std::size_t>;

/// Immutable after validation; parameters live in a separate ParamSet keyed
/// "node-name/tensor-name" (weight, bias, scale, shift, running_mean,
/// running_var).
struct NetworkGraph {
  std::vector<LayerNode> nodes;  // topological order enforced by validation
  std::string output;

  const LayerNode& node(const std::string& name) const;
  const LayerNode* find(const std::string& name) const;
  const LayerNode& input_node() const;
};

using ParamSet = std::map<std::string, Tensor>;

/// Validates structure (single input, existing and preceding predecessors,
/// arity, channel agreement) and returns per-node output shapes. Throws
/// DimensionError naming the first violation.
std::map<std::string, NodeShape> validate_and_shape(const NetworkGraph& g);

/// Names of the parameter tensors a node owns, in serialization order.
std::vector<std::string> param_names(const LayerNode& n);

/// Fresh parameters: Kaiming-uniform weights (streams keyed
/// "node/tensor/g<generation>"), zero biases/shift, unit scale/running_var.
ParamSet init_params(const NetworkGraph& g, std::uint64_t seed,
                     int generation = 0);

// --- builders --------------------------------------------------------------

/// Families: toy-resnet | small-vgg-bn | resnet18 | concat-block | mlp.
/// `classes` sizes the final linear layer (or the embedding dim for
/// retrieval heads).
NetworkGraph build_architecture(const std::string& family, std::size_t classes,
                                std::size_t in_c, std::size_t in_h,
                                std::size_t in_w);

// --- graph description file ------------------------------------------------

/// Plain-text node list; see docs in graphio.cpp for the schema.
NetworkGraph parse_graph_text(const std::string& text);
std::string graph_to_text(const NetworkGraph& g);
NetworkGraph load_graph_file(const std::string& path);

}  // namespace kevo
