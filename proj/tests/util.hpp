#pragma once

#include <string>
#include <vector>

#include "kevo/executor.hpp"
#include "kevo/graph.hpp"
#include "kevo/rng.hpp"
#include "kevo/split.hpp"

namespace testutil {

inline kevo::Tensor random_batch(const kevo::NetworkGraph& g, std::size_t n,
                                 std::uint64_t seed, const char* stream) {
  const auto& in = g.input_node();
  kevo::SeededRng rng(seed, stream);
  kevo::Tensor x({n, in.c, in.h, in.w});
  for (auto& v : x.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return x;
}

inline void randomize_params(kevo::ParamSet& p, std::uint64_t seed) {
  kevo::SeededRng rng(seed, "randomize");
  for (auto& [name, t] : p) {
    if (name.ends_with("/running_mean") || name.ends_with("/running_var"))
      continue;  // keep eval-mode stats at the identity
    for (auto& v : t.data) v = static_cast<float>(rng.uniform(-0.5, 0.5));
  }
}

/// Dense parameters with every reset-hypothesis entry forced to zero.
inline kevo::ParamSet masked_params(const kevo::NetworkGraph& g,
                                    const kevo::ParamSet& params,
                                    const kevo::SplitMask& mask) {
  kevo::ParamSet out = params;
  for (const auto& n : g.nodes) {
    if (n.kind != kevo::LayerKind::Conv && n.kind != kevo::LayerKind::Linear)
      continue;
    std::vector<std::uint8_t> wbits, bbits;
    kevo::fit_weight_bits(n, mask.specs.at(n.name), wbits, bbits);
    auto& w = out.at(n.name + "/weight");
    for (std::size_t i = 0; i < w.numel(); ++i)
      if (!wbits[i]) w.data[i] = 0.f;
    if (n.bias) {
      auto& b = out.at(n.name + "/bias");
      for (std::size_t i = 0; i < b.numel(); ++i)
        if (!bbits[i]) b.data[i] = 0.f;
    }
  }
  return out;
}

/// Small randomized graphs from the three families the splitter must handle.
/// kind: 0 = plain chain, 1 = residual block, 2 = concat block.
inline kevo::NetworkGraph random_graph(int kind, kevo::SeededRng& rng) {
  using namespace kevo;
  NetworkGraph g;
  const std::size_t in_c = 1 + rng.next_below(3);
  LayerNode in;
  in.name = "input";
  in.kind = LayerKind::Input;
  in.c = in_c;
  in.h = 6;
  in.w = 6;
  g.nodes.push_back(in);

  auto conv = [&](std::string name, std::string pred, std::size_t co,
                  std::size_t ci) {
    LayerNode n;
    n.name = std::move(name);
    n.kind = LayerKind::Conv;
    n.preds = {std::move(pred)};
    n.co = co;
    n.ci = ci;
    n.k = 3;
    n.stride = 1;
    n.pad = 1;
    g.nodes.push_back(n);
  };
  auto bn = [&](std::string name, std::string pred, std::size_t c) {
    LayerNode n;
    n.name = std::move(name);
    n.kind = LayerKind::BatchNorm;
    n.preds = {std::move(pred)};
    n.c = c;
    g.nodes.push_back(n);
  };
  auto relu = [&](std::string name, std::string pred) {
    LayerNode n;
    n.name = std::move(name);
    n.kind = LayerKind::ReLU;
    n.preds = {std::move(pred)};
    g.nodes.push_back(n);
  };
  auto tail = [&](std::string pred, std::size_t c) {
    LayerNode gp;
    gp.name = "gap";
    gp.kind = LayerKind::Gap;
    gp.preds = {std::move(pred)};
    g.nodes.push_back(gp);
    LayerNode fc;
    fc.name = "fc";
    fc.kind = LayerKind::Linear;
    fc.preds = {"gap"};
    fc.co = 2 + rng.next_below(4);
    fc.ci = c;
    fc.bias = true;
    g.nodes.push_back(fc);
    g.output = "fc";
  };

  if (kind == 0) {
    const std::size_t depth = 2 + rng.next_below(3);
    std::string prev = "input";
    std::size_t cin = in_c;
    for (std::size_t i = 0; i < depth; ++i) {
      const std::size_t co = 2 + rng.next_below(7);
      const std::string base = "c" + std::to_string(i);
      conv(base, prev, co, cin);
      bn(base + ".bn", base, co);
      relu(base + ".r", base + ".bn");
      prev = base + ".r";
      cin = co;
    }
    tail(prev, cin);
  } else if (kind == 1) {
    const std::size_t width = 2 + rng.next_below(7);
    conv("stem", "input", width, in_c);
    bn("stem.bn", "stem", width);
    relu("stem.r", "stem.bn");
    conv("res.c1", "stem.r", width, width);
    bn("res.b1", "res.c1", width);
    relu("res.r1", "res.b1");
    conv("res.c2", "res.r1", width, width);
    bn("res.b2", "res.c2", width);
    LayerNode add;
    add.name = "res.add";
    add.kind = LayerKind::Add;
    add.preds = {"res.b2", "stem.r"};
    g.nodes.push_back(add);
    relu("res.r2", "res.add");
    tail("res.r2", width);
  } else {
    const std::size_t wa = 2 + rng.next_below(5);
    const std::size_t wb = 2 + rng.next_below(5);
    conv("ba", "input", wa, in_c);
    conv("bb", "input", wb, in_c);
    LayerNode cat;
    cat.name = "cat";
    cat.kind = LayerKind::Concat;
    cat.preds = {"ba", "bb"};
    g.nodes.push_back(cat);
    bn("cat.bn", "cat", wa + wb);
    relu("cat.r", "cat.bn");
    const std::size_t co = 2 + rng.next_below(6);
    conv("after", "cat.r", co, wa + wb);
    bn("after.bn", "after", co);
    relu("after.r", "after.bn");
    tail("after.r", co);
  }
  validate_and_shape(g);
  return g;
}

}  // namespace testutil
