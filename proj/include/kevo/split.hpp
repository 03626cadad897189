#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "kevo/graph.hpp"

namespace kevo {

enum class SplitTechnique { KELS, WELS };

/// Channel-prefix split of a conv: first `keep_out` filters, kernels at the
/// `keep_in` input channels (a contiguous prefix except behind concat).
struct ConvSplit {
  std::size_t keep_out = 0;
  std::vector<std::size_t> keep_in;
};

struct LinearSplit {
  std::size_t keep_out = 0;
  std::vector<std::size_t> keep_in;
};

struct BnSplit {
  std::vector<std::size_t> keep;
};

/// Per-weight bitset (WELS). One bit per flattened weight element; bias
/// entries always belong to the fit-hypothesis.
struct WeightBitset {
  std::vector<std::uint8_t> weight_bits;
  std::vector<std::uint8_t> bias_bits;
  std::size_t popcount() const;
};

using SplitSpec = std::variant<ConvSplit, LinearSplit, BnSplit, WeightBitset>;

struct SplitMask {
  SplitTechnique technique = SplitTechnique::KELS;
  double split_rate = 0.5;
  std::map<std::string, SplitSpec> specs;  // node-name -> spec
};

/// Deterministic channel-prefix mask: ceil(s_r * C) filters/kernels per conv,
/// all input channels at the first conv, all logits at the final linear.
/// Kept input channels follow the producing layer through bn/relu/pool/add
/// and map through concat offsets.
SplitMask kels_split(const NetworkGraph& g, double split_rate);

/// Uniform-random per-weight bitsets with exact popcount
/// round(s_r * |W|) per tensor; deterministic per seed.
SplitMask wels_split(const NetworkGraph& g, double split_rate,
                     std::uint64_t seed);

/// Fraction of parameters outside the fit-hypothesis (batch-norm tensors and
/// running stats counted with the fit).
double compute_sparsity(const SplitMask& mask, const NetworkGraph& g);

/// Expands a node's spec into fit-membership bits, one per flattened weight
/// (and bias) element. Bias bits cover the first keep_out entries for
/// channel splits, so the final classifier keeps its whole bias.
void fit_weight_bits(const LayerNode& n, const SplitSpec& spec,
                     std::vector<std::uint8_t>& weight_bits,
                     std::vector<std::uint8_t>& bias_bits);

struct SlimNetwork {
  NetworkGraph graph;
  ParamSet params;
};

/// Gathers the fit-hypothesis into a standalone trimmed network. KELS only.
SlimNetwork extract_slim(const NetworkGraph& g, const ParamSet& params,
                         const SplitMask& mask);

struct LayerProfile {
  std::string name;
  std::uint64_t ops = 0;     // 2 x multiply-accumulates, per sample
  std::uint64_t params = 0;  // tensor lengths, running stats included
};

struct ProfileReport {
  std::uint64_t total_ops = 0;
  std::uint64_t total_params = 0;
  std::vector<LayerProfile> layers;
};

ProfileReport profile_network(const NetworkGraph& g);

/// Number of parameter elements covered by the mask (fit + reset).
std::uint64_t total_param_count(const NetworkGraph& g);

// --- mask file (versioned text, lossless round trip) -----------------------

std::string mask_to_text(const SplitMask& mask);
SplitMask parse_mask_text(const std::string& text);
void save_mask_file(const SplitMask& mask, const std::string& path);
SplitMask load_mask_file(const std::string& path);

}  // namespace kevo
