#include "kevo/ke.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "kevo/executor.hpp"
#include "kevo/init.hpp"
#include "kevo/losses.hpp"
#include "kevo/optim.hpp"
#include "kevo/rng.hpp"

namespace kevo {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
  if (generations < 1)
    throw ConfigError("train config: generations must be >= 1");
  if (batch < 1) throw ConfigError("train config: batch must be >= 1");
  if (!(split_rate > 0.0 && split_rate < 1.0))
    throw ConfigError("train config: split_rate must lie in (0,1)");
  if (loss == LossKind::SmoothCrossEntropy &&
      !(smoothing > 0.0 && smoothing < 1.0))
    throw ConfigError("train config: smoothing alpha must lie in (0,1)");
  if (loss == LossKind::TripletSemiHard && !(margin > 0.0))
    throw ConfigError("train config: triplet margin must be positive");
  if (mask_policy == MaskPolicy::ResampleEachGeneration &&
      technique == SplitTechnique::KELS)
    throw ConfigError(
        "train config: mask resampling is defined for WELS only (KELS masks "
        "are deterministic given the split rate)");
  if (loss == LossKind::TripletSemiHard && task != TaskKind::Retrieval)
    throw ConfigError("train config: triplet loss requires the retrieval task");
  if (task == TaskKind::Retrieval && loss != LossKind::TripletSemiHard)
    throw ConfigError("train config: retrieval task requires the triplet loss");
}

void reinit_reset(const NetworkGraph& g, ParamSet& params,
                  const SplitMask& mask, std::uint64_t seed, int generation,
                  ResetMode mode) {
  const std::string gen = "/g" + std::to_string(generation);
  for (const auto& n : g.nodes) {
    if (n.kind != LayerKind::Conv && n.kind != LayerKind::Linear) continue;
    auto it = mask.specs.find(n.name);
    if (it == mask.specs.end())
      throw DimensionError("reinit_reset: mask misses node '" + n.name + "'");
    std::vector<std::uint8_t> wbits, bbits;
    fit_weight_bits(n, it->second, wbits, bbits);

    Tensor& w = params.at(n.name + "/weight");
    if (wbits.size() != w.numel())
      throw DimensionError("reinit_reset: mask/param size mismatch at '" +
                           n.name + "'");
    if (mode == ResetMode::Random) {
      SeededRng rng(seed, n.name + "/weight" + gen);
      Tensor fresh = kaiming_uniform_init(w.shape, fan_in_of(w.shape), rng);
      for (std::size_t i = 0; i < w.numel(); ++i)
        if (!wbits[i]) w.data[i] = fresh.data[i];
    } else {
      for (std::size_t i = 0; i < w.numel(); ++i)
        if (!wbits[i]) w.data[i] = 0.f;
    }
    if (n.bias) {
      Tensor& b = params.at(n.name + "/bias");
      if (bbits.size() != b.numel())
        throw DimensionError("reinit_reset: bias mask mismatch at '" +
                             n.name + "'");
      if (mode == ResetMode::Random) {
        SeededRng rng(seed, n.name + "/bias" + gen);
        Tensor fresh = kaiming_uniform_init(b.shape, fan_in_of(w.shape), rng);
        for (std::size_t i = 0; i < b.numel(); ++i)
          if (!bbits[i]) b.data[i] = fresh.data[i];
      } else {
        for (std::size_t i = 0; i < b.numel(); ++i)
          if (!bbits[i]) b.data[i] = 0.f;
      }
    }
  }
  // batch-norm tensors transfer across generations untouched
}

namespace {

std::vector<std::vector<std::size_t>> classification_batches(
    const Dataset& train, const TrainConfig& cfg, int generation, int epoch) {
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SeededRng rng(cfg.seed, "shuffle/g" + std::to_string(generation) + "/e" +
                              std::to_string(epoch));
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    std::size_t j = i + rng.next_below(order.size() - i);
    std::swap(order[i], order[j]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t b = 0; b < order.size(); b += cfg.batch)
    batches.emplace_back(order.begin() + b,
                         order.begin() + std::min(order.size(), b + cfg.batch));
  return batches;
}

/// P classes x K samples per batch for the triplet task.
std::vector<std::vector<std::size_t>> balanced_batches(
    const Dataset& train, const TrainConfig& cfg, int generation, int epoch) {
  const std::size_t classes = train.class_count();
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < train.size(); ++i)
    by_class[train.labels[i]].push_back(i);
  std::vector<std::size_t> usable;
  for (std::size_t c = 0; c < classes; ++c)
    if (!by_class[c].empty()) usable.push_back(c);
  const std::size_t P = std::min(cfg.balanced_classes, usable.size());
  const std::size_t K = cfg.balanced_per_class;
  if (P < 2)
    throw ConfigError("triplet task: need at least 2 classes with samples");
  SeededRng rng(cfg.seed, "balanced/g" + std::to_string(generation) + "/e" +
                              std::to_string(epoch));
  const std::size_t per_batch = P * K;
  const std::size_t nbatches =
      std::max<std::size_t>(1, train.size() / per_batch);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t b = 0; b < nbatches; ++b) {
    std::vector<std::size_t> cls = usable;
    for (std::size_t i = 0; i < P; ++i) {
      std::size_t j = i + rng.next_below(cls.size() - i);
      std::swap(cls[i], cls[j]);
    }
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < P; ++i) {
      const auto& pool = by_class[cls[i]];
      for (std::size_t s = 0; s < K; ++s)
        idx.push_back(pool[rng.next_below(pool.size())]);
    }
    batches.push_back(std::move(idx));
  }
  return batches;
}

}  // namespace

std::vector<double> train_generation(const NetworkGraph& g, ParamSet& params,
                                     const Dataset& train,
                                     const TrainConfig& cfg, int generation) {
  cfg.validate();
  if (train.size() == 0) throw DataError("train_generation: empty dataset");
  SgdMomentum opt(cfg.momentum, cfg.weight_decay);  // fresh every generation
  std::vector<double> epoch_losses;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const float lr =
        static_cast<float>(cosine_lr(epoch, cfg.epochs, cfg.lr0));
    const auto batches = cfg.loss == LossKind::TripletSemiHard
                             ? balanced_batches(train, cfg, generation, epoch)
                             : classification_batches(train, cfg, generation,
                                                      epoch);
    double loss_sum = 0.0;
    std::size_t nb = 0;
    for (const auto& idx : batches) {
      Tensor x = train.batch(idx);
      const auto labels = train.batch_labels(idx);
      ForwardTrace trace;
      Tensor out = forward(g, params, x, RunMode::Train, &trace);
      double loss;
      Tensor dout;
      if (cfg.loss == LossKind::TripletSemiHard) {
        Tensor emb = l2_normalize_rows(out);
        const auto triplets =
            mine_semi_hard(emb, labels, static_cast<float>(cfg.margin));
        auto r = triplet_loss(emb, triplets, static_cast<float>(cfg.margin));
        loss = r.loss;
        dout = l2_normalize_rows_backward(out, r.grad);
      } else {
        const float alpha = cfg.loss == LossKind::SmoothCrossEntropy
                                ? static_cast<float>(cfg.smoothing)
                                : 0.f;
        auto r = cross_entropy(out, labels, alpha);
        loss = r.loss;
        dout = std::move(r.grad);
      }
      if (!std::isfinite(loss))
        throw NumericError("non-finite loss at generation " +
                           std::to_string(generation) + ", epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(nb));
      GradMap grads = backward(g, params, trace, x, dout);
      for (auto& [name, grad] : grads) opt.step(name, params.at(name), grad, lr);
      loss_sum += loss;
      ++nb;
    }
    epoch_losses.push_back(loss_sum / static_cast<double>(nb));
  }
  return epoch_losses;
}

MetricRecord evaluate_model(const NetworkGraph& g, ParamSet& params,
                            const Dataset& eval, TaskKind task) {
  if (eval.size() == 0) throw DataError("evaluate_model: empty dataset");
  const auto shapes = validate_and_shape(g);
  const std::size_t out_dim = shapes.at(g.output)[0];
  if (task == TaskKind::Classification && out_dim < eval.class_count())
    throw ConfigError("evaluate_model: network has " +
                      std::to_string(out_dim) + " logits but data has " +
                      std::to_string(eval.class_count()) + " classes");

  constexpr std::size_t kEvalBatch = 128;
  Tensor all({eval.size(), out_dim});
  for (std::size_t b = 0; b < eval.size(); b += kEvalBatch) {
    std::vector<std::size_t> idx;
    for (std::size_t i = b; i < std::min(eval.size(), b + kEvalBatch); ++i)
      idx.push_back(i);
    Tensor out = forward(g, params, eval.batch(idx), RunMode::Eval);
    std::copy_n(out.data.data(), out.numel(), all.data.data() + b * out_dim);
  }
  MetricRecord rec;
  rec.task = task;
  if (task == TaskKind::Classification) {
    rec.top1 = top1_accuracy(all, eval.labels);
  } else {
    Tensor emb = l2_normalize_rows(all);
    rec.recall1 = recall_at_k(emb, eval.labels, 1);
    rec.recall4 = recall_at_k(emb, eval.labels, 4);
    rec.nmi = nmi_score(emb, eval.labels, eval.class_count());
  }
  return rec;
}

SplitMask mask_for_generation(const NetworkGraph& g, const TrainConfig& cfg,
                              int generation) {
  if (cfg.technique == SplitTechnique::KELS)
    return kels_split(g, cfg.split_rate);
  const int eff = cfg.mask_policy == MaskPolicy::Fixed ? 1 : generation;
  const std::uint64_t mask_seed =
      cfg.seed ^ SeededRng::fnv1a("mask/g" + std::to_string(eff));
  return wels_split(g, cfg.split_rate, mask_seed);
}

std::vector<GenerationLog> run_knowledge_evolution(
    const NetworkGraph& g, const TrainConfig& cfg, const Dataset& train,
    const Dataset& eval, KeState* state,
    const GenerationCallback& on_generation) {
  cfg.validate();
  validate_and_shape(g);

  KeState local;
  KeState& st = state ? *state : local;
  int start = 1;
  if (st.completed_generations > 0) {
    start = st.completed_generations + 1;
    if (start > cfg.generations) return {};
  } else {
    st.params = init_params(g, cfg.seed, 0);
  }

  const SplitMask mask1 = mask_for_generation(g, cfg, 1);
  std::vector<GenerationLog> logs;
  for (int gen = start; gen <= cfg.generations; ++gen) {
    const auto t0 = std::chrono::steady_clock::now();
    if (gen >= 2)
      reinit_reset(g, st.params, mask_for_generation(g, cfg, gen), cfg.seed,
                   gen, cfg.reset_mode);
    GenerationLog log;
    log.generation = gen;
    log.epoch_losses = train_generation(g, st.params, train, cfg, gen);
    log.dense = evaluate_model(g, st.params, eval, cfg.task);

    const SplitMask mask_g =
        gen == 1 ? mask1 : mask_for_generation(g, cfg, gen);
    log.sparsity = compute_sparsity(mask_g, g);
    log.hypothesis_stats = hypothesis_mean_abs(g, st.params, mask_g);
    if (cfg.technique == SplitTechnique::KELS) {
      SlimNetwork slim = extract_slim(g, st.params, mask1);
      log.slim = evaluate_model(slim.graph, slim.params, eval, cfg.task);
    }
    if (cfg.mask_policy == MaskPolicy::ResampleEachGeneration && gen >= 2) {
      const auto prev =
          flatten_mask_bits(g, mask_for_generation(g, cfg, gen - 1));
      const auto first = flatten_mask_bits(g, mask1);
      const auto cur = flatten_mask_bits(g, mask_g);
      const auto h2 = h2d_metrics({prev, cur});
      log.s_h2d = h2.s_h2d[0];
      log.c_h2d = h2d_metrics({first, cur}).c_h2d[0];
    }
    st.completed_generations = gen;
    log.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (on_generation) on_generation(log, st);
    logs.push_back(std::move(log));
  }
  return logs;
}

}  // namespace kevo
