#include "kevo/graph.hpp"

#include <set>

#include "kevo/init.hpp"
#include "kevo/ops.hpp"

namespace kevo {

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Input: return "input";
    case LayerKind::Conv: return "conv";
    case LayerKind::BatchNorm: return "bn";
    case LayerKind::Linear: return "linear";
    case LayerKind::ReLU: return "relu";
    case LayerKind::Gap: return "gap";
    case LayerKind::Add: return "add";
    case LayerKind::Concat: return "concat";
    case LayerKind::MaxPool: return "maxpool";
  }
  return "?";
}

const LayerNode* NetworkGraph::find(const std::string& name) const {
  for (const auto& n : nodes)
    if (n.name == name) return &n;
  return nullptr;
}

const LayerNode& NetworkGraph::node(const std::string& name) const {
  if (const LayerNode* n = find(name)) return *n;
  throw DimensionError("graph: no node named '" + name + "'");
}

const LayerNode& NetworkGraph::input_node() const {
  for (const auto& n : nodes)
    if (n.kind == LayerKind::Input) return n;
  throw DimensionError("graph: no input node");
}

std::map<std::string, NodeShape> validate_and_shape(const NetworkGraph& g) {
  if (g.nodes.empty()) throw DimensionError("graph: empty graph");
  std::map<std::string, NodeShape> shapes;
  std::set<std::string> seen;
  std::size_t inputs = 0;
  for (const auto& n : g.nodes) {
    if (seen.count(n.name))
      throw DimensionError("graph: duplicate node name '" + n.name + "'");
    for (const auto& p : n.preds) {
      if (!seen.count(p))
        throw DimensionError("graph: node '" + n.name + "' predecessor '" + p +
                             "' missing or not topologically earlier");
    }
    auto pred_shape = [&](std::size_t i) -> const NodeShape& {
      return shapes.at(n.preds[i]);
    };
    auto want_preds = [&](std::size_t lo, std::size_t hi) {
      if (n.preds.size() < lo || n.preds.size() > hi)
        throw DimensionError("graph: node '" + n.name + "' (" +
                             kind_name(n.kind) + ") has " +
                             std::to_string(n.preds.size()) + " predecessors");
    };
    NodeShape out;
    switch (n.kind) {
      case LayerKind::Input:
        want_preds(0, 0);
        ++inputs;
        if (n.c == 0 || n.h == 0 || n.w == 0)
          throw DimensionError("graph: input '" + n.name + "' has zero dims");
        out = {n.c, n.h, n.w};
        break;
      case LayerKind::Conv: {
        want_preds(1, 1);
        const auto& s = pred_shape(0);
        if (s.size() != 3)
          throw DimensionError("graph: conv '" + n.name +
                               "' needs a CHW predecessor");
        if (s[0] != n.ci)
          throw DimensionError("graph: conv '" + n.name + "' declares Ci=" +
                               std::to_string(n.ci) + " but predecessor '" +
                               n.preds[0] + "' has " + std::to_string(s[0]) +
                               " channels");
        out = {n.co, ops::conv_out_dim(s[1], n.k, n.stride, n.pad),
               ops::conv_out_dim(s[2], n.k, n.stride, n.pad)};
        break;
      }
      case LayerKind::BatchNorm: {
        want_preds(1, 1);
        const auto& s = pred_shape(0);
        if (s.size() != 3)
          throw DimensionError("graph: bn '" + n.name +
                               "' needs a CHW predecessor");
        if (s[0] != n.c)
          throw DimensionError("graph: bn '" + n.name + "' declares C=" +
                               std::to_string(n.c) + " but predecessor has " +
                               std::to_string(s[0]) + " channels");
        out = s;
        break;
      }
      case LayerKind::Linear: {
        want_preds(1, 1);
        const auto& s = pred_shape(0);
        // a C x 1 x 1 map is accepted as flat so Input -> Linear works
        const bool flat = s.size() == 1 || (s.size() == 3 && s[1] == 1 && s[2] == 1);
        if (!flat)
          throw DimensionError("graph: linear '" + n.name +
                               "' needs a flat predecessor (use gap first)");
        if (s[0] != n.ci)
          throw DimensionError("graph: linear '" + n.name + "' declares Ci=" +
                               std::to_string(n.ci) + " but predecessor has " +
                               std::to_string(s[0]));
        out = {n.co};
        break;
      }
      case LayerKind::ReLU:
        want_preds(1, 1);
        out = pred_shape(0);
        break;
      case LayerKind::Gap: {
        want_preds(1, 1);
        const auto& s = pred_shape(0);
        if (s.size() != 3)
          throw DimensionError("graph: gap '" + n.name +
                               "' needs a CHW predecessor");
        out = {s[0]};
        break;
      }
      case LayerKind::Add: {
        want_preds(2, g.nodes.size());
        out = pred_shape(0);
        for (std::size_t i = 1; i < n.preds.size(); ++i)
          if (pred_shape(i) != out)
            throw DimensionError("graph: add '" + n.name +
                                 "' operands '" + n.preds[0] + "' and '" +
                                 n.preds[i] + "' have different shapes");
        break;
      }
      case LayerKind::Concat: {
        want_preds(2, g.nodes.size());
        out = pred_shape(0);
        if (out.size() != 3)
          throw DimensionError("graph: concat '" + n.name +
                               "' needs CHW predecessors");
        for (std::size_t i = 1; i < n.preds.size(); ++i) {
          const auto& s = pred_shape(i);
          if (s.size() != 3 || s[1] != out[1] || s[2] != out[2])
            throw DimensionError("graph: concat '" + n.name + "' operand '" +
                                 n.preds[i] +
                                 "' disagrees on a non-channel axis");
          out[0] += s[0];
        }
        break;
      }
      case LayerKind::MaxPool: {
        want_preds(1, 1);
        const auto& s = pred_shape(0);
        if (s.size() != 3)
          throw DimensionError("graph: maxpool '" + n.name +
                               "' needs a CHW predecessor");
        out = {s[0], ops::conv_out_dim(s[1], n.k, n.stride, n.pad),
               ops::conv_out_dim(s[2], n.k, n.stride, n.pad)};
        break;
      }
    }
    shapes[n.name] = std::move(out);
    seen.insert(n.name);
  }
  if (inputs != 1)
    throw DimensionError("graph: expected exactly one input node, found " +
                         std::to_string(inputs));
  if (!seen.count(g.output))
    throw DimensionError("graph: output node '" + g.output + "' missing");
  return shapes;
}

std::vector<std::string> param_names(const LayerNode& n) {
  switch (n.kind) {
    case LayerKind::Conv:
    case LayerKind::Linear:
      return n.bias ? std::vector<std::string>{"weight", "bias"}
                    : std::vector<std::string>{"weight"};
    case LayerKind::BatchNorm:
      return {"scale", "shift", "running_mean", "running_var"};
    default:
      return {};
  }
}

ParamSet init_params(const NetworkGraph& g, std::uint64_t seed,
                     int generation) {
  validate_and_shape(g);
  ParamSet params;
  const std::string gen = "/g" + std::to_string(generation);
  for (const auto& n : g.nodes) {
    switch (n.kind) {
      case LayerKind::Conv: {
        SeededRng rng(seed, n.name + "/weight" + gen);
        params[n.name + "/weight"] = kaiming_uniform_init(
            {n.co, n.k, n.k, n.ci}, n.ci * n.k * n.k, rng);
        if (n.bias) params[n.name + "/bias"] = Tensor({n.co}, 0.f);
        break;
      }
      case LayerKind::Linear: {
        SeededRng rng(seed, n.name + "/weight" + gen);
        params[n.name + "/weight"] =
            kaiming_uniform_init({n.co, n.ci}, n.ci, rng);
        if (n.bias) params[n.name + "/bias"] = Tensor({n.co}, 0.f);
        break;
      }
      case LayerKind::BatchNorm:
        params[n.name + "/scale"] = Tensor({n.c}, 1.f);
        params[n.name + "/shift"] = Tensor({n.c}, 0.f);
        params[n.name + "/running_mean"] = Tensor({n.c}, 0.f);
        params[n.name + "/running_var"] = Tensor({n.c}, 1.f);
        break;
      default:
        break;
    }
  }
  return params;
}

}  // namespace kevo
