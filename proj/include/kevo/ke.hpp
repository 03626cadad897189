#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "kevo/dataset.hpp"
#include "kevo/graph.hpp"
#include "kevo/metrics.hpp"
#include "kevo/split.hpp"

namespace kevo {

enum class LossKind { CrossEntropy, SmoothCrossEntropy, TripletSemiHard };
enum class TaskKind { Classification, Retrieval };
enum class MaskPolicy { Fixed, ResampleEachGeneration };
enum class ResetMode { Random, Zeros };

struct TrainConfig {
  int epochs = 20;
  std::size_t batch = 32;
  double lr0 = 0.256;
  float momentum = 0.9f;
  float weight_decay = 1e-4f;
  LossKind loss = LossKind::CrossEntropy;
  double smoothing = 0.1;  // smooth-ce alpha
  double margin = 0.2;     // triplet margin
  int generations = 5;
  std::uint64_t seed = 0;
  SplitTechnique technique = SplitTechnique::KELS;
  double split_rate = 0.5;
  MaskPolicy mask_policy = MaskPolicy::Fixed;
  ResetMode reset_mode = ResetMode::Random;
  TaskKind task = TaskKind::Classification;
  // class-balanced sampling for the triplet task: P classes x K samples
  std::size_t balanced_classes = 5;
  std::size_t balanced_per_class = 5;

  void validate() const;
};

struct MetricRecord {
  TaskKind task = TaskKind::Classification;
  double top1 = 0.0;
  double recall1 = 0.0;
  double recall4 = 0.0;
  double nmi = 0.0;
  double primary() const {
    return task == TaskKind::Classification ? top1 : recall1;
  }
};

struct GenerationLog {
  int generation = 0;  // 1-based
  std::vector<double> epoch_losses;
  MetricRecord dense;
  std::optional<MetricRecord> slim;  // KELS only
  double sparsity = 0.0;
  std::vector<HypothesisStat> hypothesis_stats;
  std::optional<double> s_h2d;  // mask-policy=resample, generation >= 2
  std::optional<double> c_h2d;
  double wall_time_sec = 0.0;
};

/// Eq-(1)-style re-initialization: fit entries survive bitwise, reset
/// entries get fresh Kaiming draws (stream "node/tensor/g<generation>") or
/// zeros. Batch-norm tensors and the classifier bias are untouched.
void reinit_reset(const NetworkGraph& g, ParamSet& params,
                  const SplitMask& mask, std::uint64_t seed, int generation,
                  ResetMode mode);

/// One generation: `epochs` epochs of minibatch SGD under a cosine schedule
/// restarted at lr0, shuffling via the per-(generation, epoch) stream.
/// Returns per-epoch mean training loss.
std::vector<double> train_generation(const NetworkGraph& g, ParamSet& params,
                                     const Dataset& train,
                                     const TrainConfig& cfg, int generation);

MetricRecord evaluate_model(const NetworkGraph& g, ParamSet& params,
                            const Dataset& eval, TaskKind task);

/// The mask in force during a given 1-based generation. Fixed policy always
/// returns the generation-1 mask; the resample policy derives a fresh WELS
/// mask per generation from the seed, so resumed runs recompute the series.
SplitMask mask_for_generation(const NetworkGraph& g, const TrainConfig& cfg,
                              int generation);

/// Mutable state a KE run can be checkpointed/resumed from (generation
/// boundaries only). `params` are the trained weights of the last completed
/// generation; the next generation's re-initialization is applied lazily when
/// that generation starts, so a reloaded state replays bitwise.
struct KeState {
  ParamSet params;
  int completed_generations = 0;
};

using GenerationCallback =
    std::function<void(const GenerationLog&, const KeState&)>;

/// The full generation loop. With a non-null `state` whose
/// completed_generations > 0, resumes mid-run: the next generation is
/// re-initialized from the stored trained parameters and training continues.
std::vector<GenerationLog> run_knowledge_evolution(
    const NetworkGraph& g, const TrainConfig& cfg, const Dataset& train,
    const Dataset& eval, KeState* state = nullptr,
    const GenerationCallback& on_generation = {});

}  // namespace kevo
