#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "kevo/checkpoint.hpp"
#include "kevo/config.hpp"
#include "kevo/executor.hpp"
#include "kevo/ke.hpp"
#include "kevo/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Experiment config JSON")
      ->required();
  cmd->add_option("--seed", args.seed, "Override the experiment seed");
  cmd->add_option("--out", args.out, "Override the output directory");
  cmd->add_option("--override", args.overrides,
                  "Dot-path config override, e.g. train.epochs=40");
}

kevo::ExperimentConfig load(const CommonArgs& args) {
  auto cfg = kevo::load_config_file(args.config_path, args.overrides);
  if (args.seed) {
    cfg.train.seed = *args.seed;
    cfg.dataset.blobs.seed = *args.seed;
  }
  if (!args.out.empty()) cfg.out_dir = args.out;
  cfg.validate();
  return cfg;
}

std::string meta_json(const kevo::ExperimentConfig& cfg,
                      const kevo::NetworkGraph& g, int generation) {
  json j;
  j["config"] = json::parse(kevo::config_to_json(cfg));
  j["graph"] = kevo::graph_to_text(g);
  j["generation"] = generation;
  return j.dump();
}

kevo::NetworkGraph build(const kevo::ExperimentConfig& cfg) {
  return kevo::build_architecture(cfg.family, cfg.classes, cfg.in_c, cfg.in_h,
                                  cfg.in_w);
}

std::string gen_ckpt_path(const kevo::ExperimentConfig& cfg, int gen) {
  return (fs::path(cfg.out_dir) / ("gen_" + std::to_string(gen) + ".kevo"))
      .string();
}

void print_metric(const kevo::MetricRecord& m, const std::string& label) {
  if (m.task == kevo::TaskKind::Classification) {
    std::cout << label << " top1=" << m.top1 << "\n";
  } else {
    std::cout << label << " recall@1=" << m.recall1
              << " recall@4=" << m.recall4 << " nmi=" << m.nmi << "\n";
  }
}

int run_evolve(const kevo::ExperimentConfig& cfg, bool resume) {
  fs::create_directories(cfg.out_dir);
  kevo::Dataset train, eval;
  kevo::load_dataset(cfg.dataset, train, eval);
  kevo::NetworkGraph g = build(cfg);

  kevo::KeState state;
  if (resume) {
    for (int gen = cfg.train.generations; gen >= 1; --gen) {
      const std::string p = gen_ckpt_path(cfg, gen);
      if (fs::exists(p)) {
        auto ckpt = kevo::load_checkpoint(p);
        state.params = std::move(ckpt.params);
        state.completed_generations = gen;
        std::cout << "resuming after generation " << gen << "\n";
        break;
      }
    }
  }

  auto logs = kevo::run_knowledge_evolution(
      g, cfg.train, train, eval, &state,
      [&](const kevo::GenerationLog& log, const kevo::KeState& st) {
        kevo::Checkpoint ckpt;
        ckpt.params = st.params;
        ckpt.mask = kevo::mask_for_generation(g, cfg.train, log.generation);
        ckpt.meta = meta_json(cfg, g, log.generation);
        kevo::save_checkpoint(ckpt, gen_ckpt_path(cfg, log.generation));
        std::cout << "generation " << log.generation
                  << ": dense=" << log.dense.primary();
        if (log.slim) std::cout << " slim=" << log.slim->primary();
        std::cout << " sparsity=" << log.sparsity << "\n";
      });
  if (!logs.empty()) {
    kevo::emit_report(logs,
                      (fs::path(cfg.out_dir) / "report.csv").string(),
                      (fs::path(cfg.out_dir) / "report.jsonl").string());
  }
  return 0;
}

int run_train(kevo::ExperimentConfig cfg) {
  cfg.train.generations = 1;
  return run_evolve(cfg, false);
}

int run_extract(const kevo::ExperimentConfig& cfg, const std::string& ckpt_in,
                const std::string& slim_out) {
  auto ckpt = kevo::load_checkpoint(ckpt_in);
  kevo::NetworkGraph g = build(cfg);
  kevo::SplitMask mask =
      ckpt.mask ? *ckpt.mask : kevo::mask_for_generation(g, cfg.train, 1);
  kevo::SlimNetwork slim = kevo::extract_slim(g, ckpt.params, mask);

  fs::create_directories(fs::path(slim_out).parent_path().empty()
                             ? fs::path(".")
                             : fs::path(slim_out).parent_path());
  kevo::Checkpoint out;
  out.params = slim.params;
  out.meta = meta_json(cfg, slim.graph, 0);
  kevo::save_checkpoint(out, slim_out);

  // dimension table: layer, dense dims, slim dims
  std::cout << "layer,dense_shape,slim_shape\n";
  for (const auto& n : g.nodes) {
    auto it = ckpt.params.find(n.name + "/weight");
    auto st = slim.params.find(n.name + "/weight");
    if (it == ckpt.params.end()) continue;
    std::cout << n.name << "," << it->second.shape_str() << ","
              << (st != slim.params.end() ? st->second.shape_str() : "-")
              << "\n";
  }
  std::cout << "slim checkpoint written to " << slim_out << "\n";
  return 0;
}

int run_profile(const kevo::ExperimentConfig& cfg) {
  kevo::NetworkGraph g = build(cfg);
  auto dense = kevo::profile_network(g);
  kevo::SplitMask mask = kevo::kels_split(g, cfg.train.split_rate);
  auto slim = kevo::profile_network(kevo::extract_slim(g, kevo::init_params(g, 0), mask).graph);
  std::cout << "layer,dense_ops,dense_params,slim_ops,slim_params\n";
  for (std::size_t i = 0; i < dense.layers.size(); ++i) {
    const auto& d = dense.layers[i];
    std::cout << d.name << "," << d.ops << "," << d.params;
    if (i < slim.layers.size())
      std::cout << "," << slim.layers[i].ops << "," << slim.layers[i].params;
    std::cout << "\n";
  }
  std::cout << "total," << dense.total_ops << "," << dense.total_params << ","
            << slim.total_ops << "," << slim.total_params << "\n";
  return 0;
}

int run_eval(const kevo::ExperimentConfig& cfg, const std::string& ckpt_path) {
  auto ckpt = kevo::load_checkpoint(ckpt_path);
  kevo::Dataset train, eval;
  kevo::load_dataset(cfg.dataset, train, eval);
  // the graph travels with the checkpoint so slim networks evaluate too
  kevo::NetworkGraph g;
  try {
    json meta = json::parse(ckpt.meta);
    g = kevo::parse_graph_text(meta.at("graph").get<std::string>());
  } catch (const json::exception&) {
    g = build(cfg);
  }
  auto rec = kevo::evaluate_model(g, ckpt.params, eval, cfg.train.task);
  print_metric(rec, "eval");
  return 0;
}

int run_analyze(const kevo::ExperimentConfig& cfg) {
  kevo::NetworkGraph g = build(cfg);
  std::vector<std::vector<std::uint8_t>> mask_series;
  std::cout << "generation,layer,fit_mean_abs,reset_mean_abs\n";
  bool any = false;
  for (int gen = 1; gen <= cfg.train.generations; ++gen) {
    const std::string p = gen_ckpt_path(cfg, gen);
    if (!fs::exists(p)) continue;
    any = true;
    auto ckpt = kevo::load_checkpoint(p);
    kevo::SplitMask mask =
        ckpt.mask ? *ckpt.mask : kevo::mask_for_generation(g, cfg.train, gen);
    for (const auto& s : kevo::hypothesis_mean_abs(g, ckpt.params, mask)) {
      std::cout << gen << "," << s.layer << "," << s.fit_mean_abs << ",";
      if (s.reset_mean_abs) std::cout << *s.reset_mean_abs;
      std::cout << "\n";
    }
    mask_series.push_back(kevo::flatten_mask_bits(g, mask));
  }
  if (!any) throw kevo::DataError("analyze: no checkpoints in " + cfg.out_dir);
  if (mask_series.size() >= 2) {
    auto h2 = kevo::h2d_metrics(mask_series);
    std::cout << "generation,s_h2d,c_h2d\n";
    for (std::size_t i = 0; i < h2.s_h2d.size(); ++i)
      std::cout << (i + 2) << "," << h2.s_h2d[i] << "," << h2.c_h2d[i]
                << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-evolution training toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  bool resume = false;
  std::string ckpt_path, slim_out = "slim.kevo";

  auto* train = app.add_subcommand("train", "Train a single generation");
  add_common(train, args);
  auto* evolve =
      app.add_subcommand("evolve", "Run the full generation loop");
  add_common(evolve, args);
  evolve->add_flag("--resume", resume,
                   "Continue from the latest checkpoint in the out dir");
  auto* extract =
      app.add_subcommand("extract", "Extract the slim fit-hypothesis network");
  add_common(extract, args);
  extract->add_option("--ckpt", ckpt_path, "Checkpoint to extract from")
      ->required();
  extract->add_option("--slim-out", slim_out, "Slim checkpoint output path");
  auto* profile =
      app.add_subcommand("profile", "Print dense/slim ops and params as CSV");
  add_common(profile, args);
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval, args);
  eval->add_option("--ckpt", ckpt_path, "Checkpoint to evaluate")->required();
  auto* analyze = app.add_subcommand(
      "analyze", "Recompute hypothesis stats and H2D from checkpoints");
  add_common(analyze, args);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = load(args);
    if (train->parsed()) return run_train(cfg);
    if (evolve->parsed()) return run_evolve(cfg, resume);
    if (extract->parsed()) return run_extract(cfg, ckpt_path, slim_out);
    if (profile->parsed()) return run_profile(cfg);
    if (eval->parsed()) return run_eval(cfg, ckpt_path);
    if (analyze->parsed()) return run_analyze(cfg);
  } catch (const kevo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const kevo::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const kevo::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
