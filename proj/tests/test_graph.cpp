#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kevo/executor.hpp"
#include "kevo/graph.hpp"
#include "kevo/init.hpp"
#include "kevo/rng.hpp"

using namespace kevo;

namespace {

Tensor random_input(const NetworkGraph& g, std::size_t n, const char* stream) {
  const auto& in = g.input_node();
  SeededRng rng(21, stream);
  Tensor x({n, in.c, in.h, in.w});
  for (auto& v : x.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return x;
}

}  // namespace

TEST_CASE("resnet18(102) exposes the appendix parameter shapes") {
  NetworkGraph g = build_architecture("resnet18", 102, 3, 224, 224);
  ParamSet p = init_params(g, 0);
  CHECK(p.at("conv1/weight").shape == std::vector<std::size_t>{64, 7, 7, 3});
  CHECK(p.at("layer2.0.downsample.0/weight").shape ==
        std::vector<std::size_t>{128, 1, 1, 64});
  CHECK(p.at("layer4.1.conv2/weight").shape ==
        std::vector<std::size_t>{512, 3, 3, 512});
  CHECK(p.at("fc/weight").shape == std::vector<std::size_t>{102, 512});
  CHECK(p.at("fc/bias").shape == std::vector<std::size_t>{102});
  CHECK(p.count("conv1/bias") == 0);  // convs are bias-free, bn follows

  auto shapes = validate_and_shape(g);
  CHECK(shapes.at("layer4.1.relu2") == NodeShape{512, 7, 7});
  CHECK(shapes.at("fc") == NodeShape{102});
}

TEST_CASE("mlp family is Input -> Linear and requires a flat input") {
  NetworkGraph g = build_architecture("mlp", 3, 5, 1, 1);
  CHECK(g.nodes.size() == 2);
  CHECK(g.nodes[1].kind == LayerKind::Linear);
  CHECK_THROWS_AS(build_architecture("mlp", 3, 5, 4, 4), ConfigError);
}

TEST_CASE("concat-block consumer Ci equals the sum of branch widths") {
  NetworkGraph g = build_architecture("concat-block", 4, 3, 8, 8);
  CHECK(g.node("branch_a").co + g.node("branch_b").co ==
        g.node("conv_after").ci);
  auto shapes = validate_and_shape(g);
  CHECK(shapes.at("cat")[0] == 10);
}

TEST_CASE("unknown family and degenerate class count are config errors") {
  CHECK_THROWS_AS(build_architecture("alexnet", 10, 3, 32, 32), ConfigError);
  CHECK_THROWS_AS(build_architecture("toy-resnet", 1, 3, 32, 32), ConfigError);
}

TEST_CASE("validation rejects structural violations, each named") {
  NetworkGraph g;
  CHECK_THROWS_AS(validate_and_shape(g), DimensionError);  // empty graph

  g = build_architecture("toy-resnet", 4, 1, 8, 8);
  NetworkGraph dangling = g;
  dangling.nodes[1].preds = {"nope"};
  CHECK_THROWS_WITH_AS(validate_and_shape(dangling),
                       doctest::Contains("nope"), DimensionError);

  NetworkGraph mismatch = g;
  for (auto& n : mismatch.nodes)
    if (n.name == "block.conv2") n.co = 48;  // breaks the add pair
  CHECK_THROWS_AS(validate_and_shape(mismatch), DimensionError);
}

TEST_CASE("add of different widths reports both operand nodes") {
  NetworkGraph g;
  LayerNode in;
  in.name = "input";
  in.kind = LayerKind::Input;
  in.c = 3;
  in.h = 4;
  in.w = 4;
  LayerNode a;
  a.name = "a";
  a.kind = LayerKind::Conv;
  a.preds = {"input"};
  a.co = 64;
  a.ci = 3;
  a.k = 1;
  LayerNode b = a;
  b.name = "b";
  b.co = 128;
  LayerNode s;
  s.name = "sum";
  s.kind = LayerKind::Add;
  s.preds = {"a", "b"};
  g.nodes = {in, a, b, s};
  g.output = "sum";
  CHECK_THROWS_WITH_AS(validate_and_shape(g), doctest::Contains("sum"),
                       DimensionError);
}

TEST_CASE("init_params is deterministic per (seed, stream) and respects the kaiming bound") {
  NetworkGraph g = build_architecture("toy-resnet", 4, 1, 8, 8);
  ParamSet a = init_params(g, 42);
  ParamSet b = init_params(g, 42);
  ParamSet c = init_params(g, 43);
  CHECK(a.at("conv1/weight").data == b.at("conv1/weight").data);
  CHECK(a.at("conv1/weight").data != c.at("conv1/weight").data);

  const auto& w = a.at("block.conv1/weight");
  const double bound = kaiming_bound(16 * 3 * 3);
  for (float v : w.data) CHECK(std::abs(v) <= bound);

  // bn state starts at the identity transform
  for (float v : a.at("bn1/scale").data) CHECK(v == 1.f);
  for (float v : a.at("bn1/shift").data) CHECK(v == 0.f);
  for (float v : a.at("bn1/running_var").data) CHECK(v == 1.f);
}

TEST_CASE("kaiming sample mean over 1e6 draws is within 3 sigma of zero") {
  SeededRng rng(123, "mean-test");
  const std::size_t n = 1000000;
  Tensor t = kaiming_uniform_init({n}, 100, rng);
  double mean = 0.0;
  for (float v : t.data) mean += v;
  mean /= static_cast<double>(n);
  const double b = kaiming_bound(100);
  const double sigma = b / std::sqrt(3.0 * n);  // var of U(-b,b) = b^2/3
  CHECK(std::abs(mean) < 3.0 * sigma);
}

TEST_CASE("forward with zero weights and zero shift yields zero logits") {
  NetworkGraph g = build_architecture("toy-resnet", 4, 1, 8, 8);
  ParamSet p = init_params(g, 1);
  for (auto& [name, t] : p) {
    if (name.ends_with("/weight") || name.ends_with("/bias") ||
        name.ends_with("/shift"))
      for (auto& v : t.data) v = 0.f;
  }
  Tensor x = random_input(g, 2, "zi");
  Tensor y = forward(g, p, x, RunMode::Eval);
  for (float v : y.data) CHECK(v == 0.f);
}

TEST_CASE("eval forward is pure and row-independent") {
  NetworkGraph g = build_architecture("small-vgg-bn", 4, 1, 8, 8);
  ParamSet p = init_params(g, 9);
  Tensor x = random_input(g, 3, "pi");
  Tensor y1 = forward(g, p, x, RunMode::Eval);
  Tensor y2 = forward(g, p, x, RunMode::Eval);
  CHECK(y1.data == y2.data);  // pure: same bytes, params untouched

  // permuting the batch permutes rows identically
  const std::size_t se = x.numel() / 3, so = y1.numel() / 3;
  Tensor xr({3, g.input_node().c, g.input_node().h, g.input_node().w});
  const std::size_t perm[3] = {2, 0, 1};
  for (std::size_t i = 0; i < 3; ++i)
    std::copy_n(x.data.data() + perm[i] * se, se, xr.data.data() + i * se);
  Tensor yr = forward(g, p, xr, RunMode::Eval);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < so; ++j)
      CHECK(yr.data[i * so + j] == y1.data[perm[i] * so + j]);
}

TEST_CASE("train-mode forward updates bn running stats; eval does not") {
  NetworkGraph g = build_architecture("toy-resnet", 4, 1, 8, 8);
  ParamSet p = init_params(g, 2);
  Tensor x = random_input(g, 4, "bi");
  const auto before = p.at("bn1/running_mean").data;
  forward(g, p, x, RunMode::Eval);
  CHECK(p.at("bn1/running_mean").data == before);
  ForwardTrace trace;
  forward(g, p, x, RunMode::Train, &trace);
  CHECK(p.at("bn1/running_mean").data != before);
}

TEST_CASE("resnet18 forward emits finite N x 102 logits") {
  NetworkGraph g = build_architecture("resnet18", 102, 3, 32, 32);
  ParamSet p = init_params(g, 3);
  Tensor x = random_input(g, 2, "ri");
  Tensor y = forward(g, p, x, RunMode::Eval);
  CHECK(y.shape == std::vector<std::size_t>{2, 102});
  CHECK(all_finite(y));
}

TEST_CASE("graph text round-trips losslessly") {
  for (const char* family :
       {"toy-resnet", "small-vgg-bn", "concat-block", "mlp"}) {
    const bool flat = std::string(family) == "mlp";
    NetworkGraph g =
        build_architecture(family, 4, flat ? 6 : 2, flat ? 1 : 8, flat ? 1 : 8);
    NetworkGraph h = parse_graph_text(graph_to_text(g));
    CHECK(graph_to_text(h) == graph_to_text(g));
    REQUIRE(h.nodes.size() == g.nodes.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      CHECK(h.nodes[i].name == g.nodes[i].name);
      CHECK(h.nodes[i].kind == g.nodes[i].kind);
      CHECK(h.nodes[i].preds == g.nodes[i].preds);
    }
    CHECK(h.output == g.output);
  }
}

TEST_CASE("parse_graph_text rejects malformed documents") {
  CHECK_THROWS_AS(parse_graph_text("not a graph"), ConfigError);
  CHECK_THROWS_AS(parse_graph_text("kevo-graph v99\n"), ConfigError);
}
