#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kevo/graph.hpp"
#include "kevo/split.hpp"
#include "kevo/tensor.hpp"

namespace kevo {

/// Fraction of rows whose argmax (ties -> lowest index) equals the label.
double top1_accuracy(const Tensor& logits,
                     const std::vector<std::size_t>& labels);

/// Fraction of queries whose k nearest neighbours (self excluded, Euclidean,
/// ties -> lowest index) contain a same-class point.
double recall_at_k(const Tensor& embeddings,
                   const std::vector<std::size_t>& labels, std::size_t k);

/// Seeded k-means++ assignment (<= 100 iterations, relative-shift tolerance
/// 1e-6, empty clusters reseeded from the farthest point).
std::vector<std::size_t> kmeans_assign(const Tensor& embeddings,
                                       std::size_t k, std::uint64_t seed);

/// NMI between two clusterings: I(A,B) / sqrt(H(A) * H(B)); 0 when either
/// entropy vanishes, except 1 for two identical single-block clusterings.
double nmi_from_assignments(const std::vector<std::size_t>& a,
                            const std::vector<std::size_t>& b);

/// NMI between a k-means clustering of the embeddings and the labels.
double nmi_score(const Tensor& embeddings,
                 const std::vector<std::size_t>& labels, std::size_t k,
                 std::uint64_t seed = 0);

/// Per-layer mean |w| inside the fit and reset hypotheses (weight tensors
/// of conv/linear layers). reset is absent for layers fully in the fit.
struct HypothesisStat {
  std::string layer;
  double fit_mean_abs = 0.0;
  std::optional<double> reset_mean_abs;
};

std::vector<HypothesisStat> hypothesis_mean_abs(const NetworkGraph& g,
                                                const ParamSet& params,
                                                const SplitMask& mask);

/// Flattens a mask's fit membership into one bit per parameter element,
/// node order = graph order (input for the H2D series).
std::vector<std::uint8_t> flatten_mask_bits(const NetworkGraph& g,
                                            const SplitMask& mask);

struct H2dSeries {
  std::vector<double> s_h2d;  // entry i = distance(mask_{i}, mask_{i+1}) / d
  std::vector<double> c_h2d;  // entry i = distance(mask_0, mask_{i+1}) / d
};

/// Normalized Hamming distances over >= 2 equal-length mask snapshots.
H2dSeries h2d_metrics(const std::vector<std::vector<std::uint8_t>>& series);

}  // namespace kevo
