#include "kevo/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace kevo {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw ConfigError(msg); }

/// Pulls a field and records the key as consumed; type errors name the key.
struct StrictObject {
  const json& j;
  std::string where;
  std::set<std::string> seen;

  StrictObject(const json& obj, std::string w) : j(obj), where(std::move(w)) {
    if (!j.is_object()) bad("config: '" + where + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    seen.insert(key);
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      bad("config: bad value type for '" + where + "." + key + "'");
    }
  }

  const json* sub(const char* key) {
    auto it = j.find(key);
    if (it == j.end()) return nullptr;
    seen.insert(key);
    return &*it;
  }

  void finish() {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!seen.count(it.key()))
        bad("config: unknown key '" + where + "." + it.key() + "'");
  }
};

LossKind parse_loss(const std::string& s) {
  if (s == "ce") return LossKind::CrossEntropy;
  if (s == "smooth-ce") return LossKind::SmoothCrossEntropy;
  if (s == "triplet") return LossKind::TripletSemiHard;
  bad("config: loss must be ce|smooth-ce|triplet, got '" + s + "'");
}

const char* loss_name(LossKind k) {
  switch (k) {
    case LossKind::CrossEntropy: return "ce";
    case LossKind::SmoothCrossEntropy: return "smooth-ce";
    default: return "triplet";
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  train.validate();
  if (classes < 2) bad("config: classes must be >= 2");
  if (in_c * in_h * in_w == 0) bad("config: input shape must be non-empty");
  if (out_dir.empty()) bad("config: out_dir must be non-empty");
  const std::set<std::string> sources = {"idx-pair", "synthetic-blobs",
                                         "tensor-manifest"};
  if (!sources.count(dataset.source))
    bad("config: dataset.source must be idx-pair|synthetic-blobs|"
        "tensor-manifest, got '" +
        dataset.source + "'");
  if (dataset.source == "idx-pair" &&
      (dataset.train_images.empty() || dataset.train_labels.empty() ||
       dataset.eval_images.empty() || dataset.eval_labels.empty()))
    bad("config: idx-pair needs train_images/train_labels/eval_images/"
        "eval_labels");
  if (dataset.source == "synthetic-blobs") dataset.blobs.validate();
  if (dataset.source == "tensor-manifest" &&
      (dataset.train_manifest.empty() || dataset.eval_manifest.empty()))
    bad("config: tensor-manifest needs train_manifest/eval_manifest");
}

ExperimentConfig parse_config_text(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    bad(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  StrictObject top(root, "");

  if (const json* a = top.sub("architecture")) {
    StrictObject arch(*a, "architecture");
    arch.get("family", cfg.family);
    arch.get("classes", cfg.classes);
    std::vector<std::size_t> input;
    arch.get("input", input);
    if (!input.empty()) {
      if (input.size() != 3)
        bad("config: architecture.input must be [c,h,w]");
      cfg.in_c = input[0];
      cfg.in_h = input[1];
      cfg.in_w = input[2];
    }
    arch.finish();
  }

  std::string technique = "kels";
  top.get("technique", technique);
  if (technique == "kels") cfg.train.technique = SplitTechnique::KELS;
  else if (technique == "wels") cfg.train.technique = SplitTechnique::WELS;
  else bad("config: technique must be kels|wels, got '" + technique + "'");
  top.get("split_rate", cfg.train.split_rate);
  top.get("seed", cfg.train.seed);
  top.get("out_dir", cfg.out_dir);

  if (const json* t = top.sub("train")) {
    StrictObject tr(*t, "train");
    tr.get("epochs", cfg.train.epochs);
    tr.get("batch", cfg.train.batch);
    tr.get("lr0", cfg.train.lr0);
    tr.get("momentum", cfg.train.momentum);
    tr.get("weight_decay", cfg.train.weight_decay);
    std::string loss = loss_name(cfg.train.loss);
    tr.get("loss", loss);
    cfg.train.loss = parse_loss(loss);
    tr.get("smoothing", cfg.train.smoothing);
    tr.get("margin", cfg.train.margin);
    tr.get("generations", cfg.train.generations);
    std::string policy = cfg.train.mask_policy == MaskPolicy::Fixed
                             ? "fixed"
                             : "resample";
    tr.get("mask_policy", policy);
    if (policy == "fixed") cfg.train.mask_policy = MaskPolicy::Fixed;
    else if (policy == "resample")
      cfg.train.mask_policy = MaskPolicy::ResampleEachGeneration;
    else bad("config: train.mask_policy must be fixed|resample");
    std::string reset =
        cfg.train.reset_mode == ResetMode::Random ? "random" : "zeros";
    tr.get("reset_mode", reset);
    if (reset == "random") cfg.train.reset_mode = ResetMode::Random;
    else if (reset == "zeros") cfg.train.reset_mode = ResetMode::Zeros;
    else bad("config: train.reset_mode must be random|zeros");
    std::string task = cfg.train.task == TaskKind::Classification
                           ? "classification"
                           : "retrieval";
    tr.get("task", task);
    if (task == "classification") cfg.train.task = TaskKind::Classification;
    else if (task == "retrieval") cfg.train.task = TaskKind::Retrieval;
    else bad("config: train.task must be classification|retrieval");
    tr.get("balanced_classes", cfg.train.balanced_classes);
    tr.get("balanced_per_class", cfg.train.balanced_per_class);
    tr.finish();
  }

  if (const json* d = top.sub("dataset")) {
    StrictObject ds(*d, "dataset");
    ds.get("source", cfg.dataset.source);
    ds.get("train_images", cfg.dataset.train_images);
    ds.get("train_labels", cfg.dataset.train_labels);
    ds.get("eval_images", cfg.dataset.eval_images);
    ds.get("eval_labels", cfg.dataset.eval_labels);
    if (const json* b = ds.sub("blobs")) {
      StrictObject bl(*b, "dataset.blobs");
      bl.get("classes", cfg.dataset.blobs.classes);
      bl.get("per_class", cfg.dataset.blobs.per_class);
      std::vector<std::size_t> shape;
      bl.get("shape", shape);
      if (!shape.empty()) {
        if (shape.size() != 3) bad("config: dataset.blobs.shape = [c,h,w]");
        cfg.dataset.blobs.c = shape[0];
        cfg.dataset.blobs.h = shape[1];
        cfg.dataset.blobs.w = shape[2];
      }
      bl.get("noise_std", cfg.dataset.blobs.noise_std);
      bl.finish();
    }
    ds.get("eval_per_class", cfg.dataset.eval_per_class);
    ds.get("train_manifest", cfg.dataset.train_manifest);
    ds.get("eval_manifest", cfg.dataset.eval_manifest);
    std::vector<std::size_t> shape;
    ds.get("shape", shape);
    if (!shape.empty()) {
      if (shape.size() != 3) bad("config: dataset.shape must be [c,h,w]");
      cfg.dataset.c = shape[0];
      cfg.dataset.h = shape[1];
      cfg.dataset.w = shape[2];
    }
    ds.finish();
  }
  top.finish();

  cfg.dataset.blobs.seed = cfg.train.seed;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  return load_config_file(path, {});
}

ExperimentConfig load_config_file(const std::string& path,
                                  const std::vector<std::string>& overrides) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  json root;
  try {
    root = json::parse(ss.str());
  } catch (const json::exception& e) {
    bad(std::string("config: invalid JSON in ") + path + ": " + e.what());
  }
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      bad("override '" + ov + "': expected key=value");
    const std::string key = ov.substr(0, eq);
    const std::string val = ov.substr(eq + 1);
    json parsed;
    try {
      parsed = json::parse(val);
    } catch (const json::exception&) {
      parsed = val;  // unquoted strings pass through verbatim
    }
    try {
      // dot-path -> JSON pointer
      std::string p = "/";
      for (char ch : key) p += ch == '.' ? '/' : ch;
      root[json::json_pointer(p)] = parsed;
    } catch (const json::exception& e) {
      bad("override '" + ov + "': " + e.what());
    }
  }
  return parse_config_text(root.dump());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["architecture"] = {{"family", cfg.family},
                       {"classes", cfg.classes},
                       {"input", {cfg.in_c, cfg.in_h, cfg.in_w}}};
  j["technique"] =
      cfg.train.technique == SplitTechnique::KELS ? "kels" : "wels";
  j["split_rate"] = cfg.train.split_rate;
  j["seed"] = cfg.train.seed;
  j["out_dir"] = cfg.out_dir;
  j["train"] = {
      {"epochs", cfg.train.epochs},
      {"batch", cfg.train.batch},
      {"lr0", cfg.train.lr0},
      {"momentum", cfg.train.momentum},
      {"weight_decay", cfg.train.weight_decay},
      {"loss", loss_name(cfg.train.loss)},
      {"smoothing", cfg.train.smoothing},
      {"margin", cfg.train.margin},
      {"generations", cfg.train.generations},
      {"mask_policy",
       cfg.train.mask_policy == MaskPolicy::Fixed ? "fixed" : "resample"},
      {"reset_mode",
       cfg.train.reset_mode == ResetMode::Random ? "random" : "zeros"},
      {"task", cfg.train.task == TaskKind::Classification ? "classification"
                                                          : "retrieval"},
      {"balanced_classes", cfg.train.balanced_classes},
      {"balanced_per_class", cfg.train.balanced_per_class},
  };
  json ds;
  ds["source"] = cfg.dataset.source;
  if (cfg.dataset.source == "idx-pair") {
    ds["train_images"] = cfg.dataset.train_images;
    ds["train_labels"] = cfg.dataset.train_labels;
    ds["eval_images"] = cfg.dataset.eval_images;
    ds["eval_labels"] = cfg.dataset.eval_labels;
  } else if (cfg.dataset.source == "synthetic-blobs") {
    ds["blobs"] = {{"classes", cfg.dataset.blobs.classes},
                   {"per_class", cfg.dataset.blobs.per_class},
                   {"shape",
                    {cfg.dataset.blobs.c, cfg.dataset.blobs.h,
                     cfg.dataset.blobs.w}},
                   {"noise_std", cfg.dataset.blobs.noise_std}};
    ds["eval_per_class"] = cfg.dataset.eval_per_class;
  } else {
    ds["train_manifest"] = cfg.dataset.train_manifest;
    ds["eval_manifest"] = cfg.dataset.eval_manifest;
    ds["shape"] = {cfg.dataset.c, cfg.dataset.h, cfg.dataset.w};
  }
  j["dataset"] = ds;
  return j.dump(2);
}

void load_dataset(const DatasetSpec& spec, Dataset& train, Dataset& eval) {
  if (spec.source == "idx-pair") {
    train = load_idx_pair(spec.train_images, spec.train_labels);
    eval = load_idx_pair(spec.eval_images, spec.eval_labels);
  } else if (spec.source == "synthetic-blobs") {
    train = synthetic_blobs(spec.blobs, "train");
    BlobSpec ev = spec.blobs;
    ev.per_class = spec.eval_per_class;
    eval = synthetic_blobs(ev, "eval");
  } else if (spec.source == "tensor-manifest") {
    train = load_tensor_manifest(spec.train_manifest, spec.c, spec.h, spec.w);
    eval = load_tensor_manifest(spec.eval_manifest, spec.c, spec.h, spec.w);
  } else {
    throw ConfigError("dataset: unknown source '" + spec.source + "'");
  }
  if (train.c != eval.c || train.h != eval.h || train.w != eval.w)
    throw DataError("dataset: train/eval sample shapes differ");
}

}  // namespace kevo
