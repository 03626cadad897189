#pragma once

#include <string>
#include <vector>

#include "kevo/data.hpp"
#include "kevo/ke.hpp"

namespace kevo {

/// Where samples come from: a generator or local files only.
struct DatasetSpec {
  std::string source = "synthetic-blobs";  // idx-pair | synthetic-blobs |
                                           // tensor-manifest
  // idx-pair
  std::string train_images, train_labels, eval_images, eval_labels;
  // synthetic-blobs (train split uses per_class, eval split eval_per_class)
  BlobSpec blobs;
  std::size_t eval_per_class = 10;
  // tensor-manifest
  std::string train_manifest, eval_manifest;
  std::size_t c = 1, h = 8, w = 8;
};

/// Full experiment description, parsed from a strict JSON file: unknown keys
/// are rejected so typos can't silently misconfigure a run.
struct ExperimentConfig {
  std::string family = "toy-resnet";
  std::size_t classes = 4;
  std::size_t in_c = 1, in_h = 8, in_w = 8;
  TrainConfig train;
  DatasetSpec dataset;
  std::string out_dir = "runs/default";

  void validate() const;
};

/// Parses JSON text; throws ConfigError naming any unknown or ill-typed key.
ExperimentConfig parse_config_text(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

/// Applies "dot.path=value" overrides (e.g. "train.epochs=40") on the JSON
/// document before parsing.
ExperimentConfig load_config_file(const std::string& path,
                                  const std::vector<std::string>& overrides);

std::string config_to_json(const ExperimentConfig& cfg);

/// Materializes the (train, eval) pair described by the spec.
void load_dataset(const DatasetSpec& spec, Dataset& train, Dataset& eval);

}  // namespace kevo
