#include "kevo/graph.hpp"

namespace kevo {
namespace {

LayerNode input(std::size_t c, std::size_t h, std::size_t w) {
  LayerNode n;
  n.name = "input";
  n.kind = LayerKind::Input;
  n.c = c;
  n.h = h;
  n.w = w;
  return n;
}

LayerNode conv(std::string name, std::string pred, std::size_t co,
               std::size_t ci, std::size_t k, std::size_t stride,
               std::size_t pad, bool bias = false) {
  LayerNode n;
  n.name = std::move(name);
  n.kind = LayerKind::Conv;
  n.preds = {std::move(pred)};
  n.co = co;
  n.ci = ci;
  n.k = k;
  n.stride = stride;
  n.pad = pad;
  n.bias = bias;
  return n;
}

LayerNode bn(std::string name, std::string pred, std::size_t c) {
  LayerNode n;
  n.name = std::move(name);
  n.kind = LayerKind::BatchNorm;
  n.preds = {std::move(pred)};
  n.c = c;
  return n;
}

LayerNode relu(std::string name, std::string pred) {
  LayerNode n;
  n.name = std::move(name);
  n.kind = LayerKind::ReLU;
  n.preds = {std::move(pred)};
  return n;
}

LayerNode gap(std::string name, std::string pred) {
  LayerNode n;
  n.name = std::move(name);
  n.kind = LayerKind::Gap;
  n.preds = {std::move(pred)};
  return n;
}

LayerNode linear(std::string name, std::string pred, std::size_t co,
                 std::size_t ci, bool bias = true) {
  LayerNode n;
  n.name = std::move(name);
  n.kind = LayerKind::Linear;
  n.preds = {std::move(pred)};
  n.co = co;
  n.ci = ci;
  n.bias = bias;
  return n;
}

LayerNode add(std::string name, std::vector<std::string> preds) {
  LayerNode n;
  n.name = std::move(name);
  n.kind = LayerKind::Add;
  n.preds = std::move(preds);
  return n;
}

LayerNode concat(std::string name, std::vector<std::string> preds) {
  LayerNode n;
  n.name = std::move(name);
  n.kind = LayerKind::Concat;
  n.preds = std::move(preds);
  return n;
}

LayerNode maxpool(std::string name, std::string pred, std::size_t k,
                  std::size_t stride, std::size_t pad) {
  LayerNode n;
  n.name = std::move(name);
  n.kind = LayerKind::MaxPool;
  n.preds = {std::move(pred)};
  n.k = k;
  n.stride = stride;
  n.pad = pad;
  return n;
}

NetworkGraph resnet18(std::size_t classes, std::size_t in_c, std::size_t in_h,
                      std::size_t in_w) {
  NetworkGraph g;
  g.nodes.push_back(input(in_c, in_h, in_w));
  g.nodes.push_back(conv("conv1", "input", 64, in_c, 7, 2, 3));
  g.nodes.push_back(bn("bn1", "conv1", 64));
  g.nodes.push_back(relu("relu1", "bn1"));
  g.nodes.push_back(maxpool("maxpool", "relu1", 3, 2, 1));

  std::string prev = "maxpool";
  std::size_t cin = 64;
  const std::size_t widths[4] = {64, 128, 256, 512};
  for (int stage = 0; stage < 4; ++stage) {
    const std::size_t co = widths[stage];
    for (int blk = 0; blk < 2; ++blk) {
      const std::string base =
          "layer" + std::to_string(stage + 1) + "." + std::to_string(blk);
      const std::size_t stride = (blk == 0 && stage > 0) ? 2 : 1;
      g.nodes.push_back(conv(base + ".conv1", prev, co, cin, 3, stride, 1));
      g.nodes.push_back(bn(base + ".bn1", base + ".conv1", co));
      g.nodes.push_back(relu(base + ".relu1", base + ".bn1"));
      g.nodes.push_back(conv(base + ".conv2", base + ".relu1", co, co, 3, 1, 1));
      g.nodes.push_back(bn(base + ".bn2", base + ".conv2", co));
      std::string shortcut = prev;
      if (stride != 1 || cin != co) {
        g.nodes.push_back(conv(base + ".downsample.0", prev, co, cin, 1,
                               stride, 0));
        g.nodes.push_back(
            bn(base + ".downsample.1", base + ".downsample.0", co));
        shortcut = base + ".downsample.1";
      }
      g.nodes.push_back(add(base + ".add", {base + ".bn2", shortcut}));
      g.nodes.push_back(relu(base + ".relu2", base + ".add"));
      prev = base + ".relu2";
      cin = co;
    }
  }
  g.nodes.push_back(gap("gap", prev));
  g.nodes.push_back(linear("fc", "gap", classes, 512));
  g.output = "fc";
  return g;
}

NetworkGraph toy_resnet(std::size_t classes, std::size_t in_c,
                        std::size_t in_h, std::size_t in_w) {
  NetworkGraph g;
  g.nodes.push_back(input(in_c, in_h, in_w));
  g.nodes.push_back(conv("conv1", "input", 16, in_c, 3, 1, 1));
  g.nodes.push_back(bn("bn1", "conv1", 16));
  g.nodes.push_back(relu("relu1", "bn1"));
  g.nodes.push_back(conv("block.conv1", "relu1", 32, 16, 3, 2, 1));
  g.nodes.push_back(bn("block.bn1", "block.conv1", 32));
  g.nodes.push_back(relu("block.relu1", "block.bn1"));
  g.nodes.push_back(conv("block.conv2", "block.relu1", 32, 32, 3, 1, 1));
  g.nodes.push_back(bn("block.bn2", "block.conv2", 32));
  g.nodes.push_back(conv("block.downsample.0", "relu1", 32, 16, 1, 2, 0));
  g.nodes.push_back(bn("block.downsample.1", "block.downsample.0", 32));
  g.nodes.push_back(
      add("block.add", {"block.bn2", "block.downsample.1"}));
  g.nodes.push_back(relu("block.relu2", "block.add"));
  g.nodes.push_back(gap("gap", "block.relu2"));
  g.nodes.push_back(linear("fc", "gap", classes, 32));
  g.output = "fc";
  return g;
}

// 8-conv chain echoing the VGG11-with-bn conv stack at reduced width.
NetworkGraph small_vgg_bn(std::size_t classes, std::size_t in_c,
                          std::size_t in_h, std::size_t in_w) {
  NetworkGraph g;
  g.nodes.push_back(input(in_c, in_h, in_w));
  const std::size_t widths[8] = {16, 32, 64, 64, 128, 128, 128, 128};
  const bool pool_after[8] = {true, true, false, true, false, true, false, false};
  std::string prev = "input";
  std::size_t cin = in_c;
  std::size_t spatial = in_h;
  for (int i = 0; i < 8; ++i) {
    const std::string base = "conv" + std::to_string(i + 1);
    g.nodes.push_back(conv(base, prev, widths[i], cin, 3, 1, 1));
    g.nodes.push_back(bn("bn" + std::to_string(i + 1), base, widths[i]));
    g.nodes.push_back(
        relu("relu" + std::to_string(i + 1), "bn" + std::to_string(i + 1)));
    prev = "relu" + std::to_string(i + 1);
    if (pool_after[i] && spatial >= 4) {
      g.nodes.push_back(maxpool("pool" + std::to_string(i + 1), prev, 2, 2, 0));
      prev = "pool" + std::to_string(i + 1);
      spatial /= 2;
    }
    cin = widths[i];
  }
  g.nodes.push_back(gap("gap", prev));
  g.nodes.push_back(linear("fc", "gap", classes, cin));
  g.output = "fc";
  return g;
}

// Two parallel branches into a concat, a batch norm directly on the
// concatenated map, then a consumer conv. Covers both concat-consumer
// orders the slim extractor must handle.
NetworkGraph concat_block(std::size_t classes, std::size_t in_c,
                          std::size_t in_h, std::size_t in_w) {
  NetworkGraph g;
  g.nodes.push_back(input(in_c, in_h, in_w));
  g.nodes.push_back(conv("branch_a", "input", 4, in_c, 3, 1, 1));
  g.nodes.push_back(conv("branch_b", "input", 6, in_c, 3, 1, 1));
  g.nodes.push_back(concat("cat", {"branch_a", "branch_b"}));
  g.nodes.push_back(bn("cat_bn", "cat", 10));
  g.nodes.push_back(relu("cat_relu", "cat_bn"));
  g.nodes.push_back(conv("conv_after", "cat_relu", 8, 10, 3, 1, 1));
  g.nodes.push_back(bn("bn_after", "conv_after", 8));
  g.nodes.push_back(relu("relu_after", "bn_after"));
  g.nodes.push_back(gap("gap", "relu_after"));
  g.nodes.push_back(linear("fc", "gap", classes, 8));
  g.output = "fc";
  return g;
}

NetworkGraph mlp(std::size_t classes, std::size_t in_c, std::size_t in_h,
                 std::size_t in_w) {
  NetworkGraph g;
  g.nodes.push_back(input(in_c, in_h, in_w));
  g.nodes.push_back(linear("fc", "input", classes, in_c));
  g.output = "fc";
  if (in_h != 1 || in_w != 1)
    throw ConfigError("mlp family needs a flat input (H=W=1)");
  return g;
}

}  // namespace

NetworkGraph build_architecture(const std::string& family, std::size_t classes,
                                std::size_t in_c, std::size_t in_h,
                                std::size_t in_w) {
  if (classes < 2) throw ConfigError("build_architecture: classes must be >= 2");
  NetworkGraph g;
  if (family == "resnet18")
    g = resnet18(classes, in_c, in_h, in_w);
  else if (family == "toy-resnet")
    g = toy_resnet(classes, in_c, in_h, in_w);
  else if (family == "small-vgg-bn")
    g = small_vgg_bn(classes, in_c, in_h, in_w);
  else if (family == "concat-block")
    g = concat_block(classes, in_c, in_h, in_w);
  else if (family == "mlp")
    g = mlp(classes, in_c, in_h, in_w);
  else
    throw ConfigError("unknown architecture family '" + family + "'");
  validate_and_shape(g);
  return g;
}

}  // namespace kevo
