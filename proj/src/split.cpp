#include "kevo/split.hpp"

#include <algorithm>
#include <cmath>

#include "kevo/rng.hpp"

namespace kevo {
namespace {

std::size_t ceil_keep(double sr, std::size_t c) {
  // ceil(s_r * C), per the prose rather than the slice truncation
  auto k = static_cast<std::size_t>(std::ceil(sr * static_cast<double>(c)));
  return std::min(std::max<std::size_t>(k, 1), c);
}

std::vector<std::size_t> prefix(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

void check_rate(double sr) {
  if (!(sr > 0.0 && sr < 1.0))
    throw ConfigError("split-rate must lie in (0,1), got " +
                      std::to_string(sr));
}

}  // namespace

std::size_t WeightBitset::popcount() const {
  std::size_t n = 0;
  for (auto b : weight_bits) n += b;
  for (auto b : bias_bits) n += b;
  return n;
}

SplitMask kels_split(const NetworkGraph& g, double split_rate) {
  check_rate(split_rate);
  auto shapes = validate_and_shape(g);
  SplitMask mask;
  mask.technique = SplitTechnique::KELS;
  mask.split_rate = split_rate;

  // kept output-channel set per node, propagated in topological order
  std::map<std::string, std::vector<std::size_t>> kept;
  for (const auto& n : g.nodes) {
    switch (n.kind) {
      case LayerKind::Input:
        kept[n.name] = prefix(n.c);
        break;
      case LayerKind::Conv: {
        ConvSplit spec;
        spec.keep_out = ceil_keep(split_rate, n.co);
        spec.keep_in = kept.at(n.preds[0]);
        mask.specs[n.name] = spec;
        kept[n.name] = prefix(spec.keep_out);
        break;
      }
      case LayerKind::Linear: {
        LinearSplit spec;
        const bool final_classifier = n.name == g.output;
        spec.keep_out = final_classifier ? n.co : ceil_keep(split_rate, n.co);
        spec.keep_in = kept.at(n.preds[0]);
        mask.specs[n.name] = spec;
        kept[n.name] = prefix(spec.keep_out);
        break;
      }
      case LayerKind::BatchNorm: {
        BnSplit spec;
        spec.keep = kept.at(n.preds[0]);
        mask.specs[n.name] = spec;
        kept[n.name] = spec.keep;
        break;
      }
      case LayerKind::ReLU:
      case LayerKind::Gap:
      case LayerKind::MaxPool:
        kept[n.name] = kept.at(n.preds[0]);
        break;
      case LayerKind::Add: {
        const auto& first = kept.at(n.preds[0]);
        for (std::size_t i = 1; i < n.preds.size(); ++i)
          if (kept.at(n.preds[i]) != first)
            throw DimensionError(
                "kels_split: add '" + n.name + "' operands '" + n.preds[0] +
                "' and '" + n.preds[i] + "' keep different channel sets");
        kept[n.name] = first;
        break;
      }
      case LayerKind::Concat: {
        // union of per-branch kept sets, shifted to concatenated positions
        std::vector<std::size_t> merged;
        std::size_t offset = 0;
        for (const auto& p : n.preds) {
          for (std::size_t c : kept.at(p)) merged.push_back(offset + c);
          offset += shapes.at(p)[0];
        }
        kept[n.name] = merged;
        break;
      }
    }
  }
  return mask;
}

SplitMask wels_split(const NetworkGraph& g, double split_rate,
                     std::uint64_t seed) {
  check_rate(split_rate);
  validate_and_shape(g);
  SplitMask mask;
  mask.technique = SplitTechnique::WELS;
  mask.split_rate = split_rate;
  for (const auto& n : g.nodes) {
    if (n.kind == LayerKind::Conv || n.kind == LayerKind::Linear) {
      WeightBitset spec;
      const std::size_t wlen = n.kind == LayerKind::Conv
                                   ? n.co * n.k * n.k * n.ci
                                   : n.co * n.ci;
      const auto ones = static_cast<std::size_t>(
          std::floor(split_rate * static_cast<double>(wlen) + 0.5));
      spec.weight_bits.assign(wlen, 0);
      std::vector<std::size_t> idx(wlen);
      for (std::size_t i = 0; i < wlen; ++i) idx[i] = i;
      SeededRng rng(seed, n.name + "/weight/wels");
      for (std::size_t i = 0; i < ones; ++i) {
        std::size_t j = i + rng.next_below(wlen - i);
        std::swap(idx[i], idx[j]);
        spec.weight_bits[idx[i]] = 1;
      }
      if (n.bias) spec.bias_bits.assign(n.co, 1);  // biases stay in the fit
      mask.specs[n.name] = spec;
    } else if (n.kind == LayerKind::BatchNorm) {
      // transferred whole across generations
      BnSplit spec;
      spec.keep = prefix(n.c);
      mask.specs[n.name] = spec;
    }
  }
  return mask;
}

void fit_weight_bits(const LayerNode& n, const SplitSpec& spec,
                     std::vector<std::uint8_t>& weight_bits,
                     std::vector<std::uint8_t>& bias_bits) {
  weight_bits.clear();
  bias_bits.clear();
  if (const auto* cs = std::get_if<ConvSplit>(&spec)) {
    weight_bits.assign(n.co * n.k * n.k * n.ci, 0);
    std::vector<std::uint8_t> in_kept(n.ci, 0);
    for (std::size_t c : cs->keep_in) in_kept[c] = 1;
    for (std::size_t co = 0; co < cs->keep_out; ++co)
      for (std::size_t kk = 0; kk < n.k * n.k; ++kk)
        for (std::size_t ci = 0; ci < n.ci; ++ci)
          if (in_kept[ci]) weight_bits[(co * n.k * n.k + kk) * n.ci + ci] = 1;
    if (n.bias) {
      bias_bits.assign(n.co, 0);
      for (std::size_t co = 0; co < cs->keep_out; ++co) bias_bits[co] = 1;
    }
  } else if (const auto* ls = std::get_if<LinearSplit>(&spec)) {
    weight_bits.assign(n.co * n.ci, 0);
    std::vector<std::uint8_t> in_kept(n.ci, 0);
    for (std::size_t c : ls->keep_in) in_kept[c] = 1;
    for (std::size_t co = 0; co < ls->keep_out; ++co)
      for (std::size_t ci = 0; ci < n.ci; ++ci)
        if (in_kept[ci]) weight_bits[co * n.ci + ci] = 1;
    if (n.bias) {
      bias_bits.assign(n.co, 0);
      for (std::size_t co = 0; co < ls->keep_out; ++co) bias_bits[co] = 1;
    }
  } else if (const auto* wb = std::get_if<WeightBitset>(&spec)) {
    weight_bits = wb->weight_bits;
    bias_bits = wb->bias_bits;
  } else {
    throw DimensionError("fit_weight_bits: node '" + n.name +
                         "' has a non-weight spec");
  }
}

std::uint64_t total_param_count(const NetworkGraph& g) {
  std::uint64_t total = 0;
  for (const auto& n : g.nodes) {
    switch (n.kind) {
      case LayerKind::Conv:
        total += n.co * n.k * n.k * n.ci + (n.bias ? n.co : 0);
        break;
      case LayerKind::Linear:
        total += n.co * n.ci + (n.bias ? n.co : 0);
        break;
      case LayerKind::BatchNorm:
        total += 4 * n.c;
        break;
      default:
        break;
    }
  }
  return total;
}

double compute_sparsity(const SplitMask& mask, const NetworkGraph& g) {
  std::uint64_t total = 0, fit = 0;
  for (const auto& n : g.nodes) {
    if (n.kind != LayerKind::Conv && n.kind != LayerKind::Linear &&
        n.kind != LayerKind::BatchNorm)
      continue;
    auto it = mask.specs.find(n.name);
    if (it == mask.specs.end())
      throw DimensionError("compute_sparsity: mask misses node '" + n.name +
                           "'");
    if (n.kind == LayerKind::BatchNorm) {
      const auto& spec = std::get<BnSplit>(it->second);
      total += 4 * n.c;
      fit += 4 * spec.keep.size();
      continue;
    }
    const std::size_t wlen =
        n.kind == LayerKind::Conv ? n.co * n.k * n.k * n.ci : n.co * n.ci;
    total += wlen + (n.bias ? n.co : 0);
    if (mask.technique == SplitTechnique::KELS) {
      if (n.kind == LayerKind::Conv) {
        const auto& spec = std::get<ConvSplit>(it->second);
        fit += spec.keep_out * n.k * n.k * spec.keep_in.size() +
               (n.bias ? spec.keep_out : 0);
      } else {
        const auto& spec = std::get<LinearSplit>(it->second);
        fit += spec.keep_out * spec.keep_in.size() +
               (n.bias ? spec.keep_out : 0);
      }
    } else {
      const auto& spec = std::get<WeightBitset>(it->second);
      fit += spec.popcount();
    }
  }
  return 1.0 - static_cast<double>(fit) / static_cast<double>(total);
}

SlimNetwork extract_slim(const NetworkGraph& g, const ParamSet& params,
                         const SplitMask& mask) {
  if (mask.technique != SplitTechnique::WELS &&
      mask.technique != SplitTechnique::KELS)
    throw ConfigError("extract_slim: unknown technique");
  if (mask.technique == SplitTechnique::WELS)
    throw ConfigError(
        "extract_slim: WELS masks are not channel-structured; only KELS "
        "masks extract to a slim network");

  SlimNetwork slim;
  slim.graph.output = g.output;
  for (const auto& n : g.nodes) {
    LayerNode sn = n;
    switch (n.kind) {
      case LayerKind::Conv: {
        const auto& spec = std::get<ConvSplit>(mask.specs.at(n.name));
        sn.co = spec.keep_out;
        sn.ci = spec.keep_in.size();
        const Tensor& w = params.at(n.name + "/weight");
        Tensor sw({sn.co, n.k, n.k, sn.ci});
        for (std::size_t co = 0; co < sn.co; ++co)
          for (std::size_t kh = 0; kh < n.k; ++kh)
            for (std::size_t kw = 0; kw < n.k; ++kw)
              for (std::size_t i = 0; i < sn.ci; ++i)
                sw.data[((co * n.k + kh) * n.k + kw) * sn.ci + i] =
                    w.data[((co * n.k + kh) * n.k + kw) * n.ci +
                           spec.keep_in[i]];
        slim.params[n.name + "/weight"] = std::move(sw);
        if (n.bias) {
          const Tensor& b = params.at(n.name + "/bias");
          Tensor sb({sn.co});
          for (std::size_t co = 0; co < sn.co; ++co) sb.data[co] = b.data[co];
          slim.params[n.name + "/bias"] = std::move(sb);
        }
        break;
      }
      case LayerKind::Linear: {
        const auto& spec = std::get<LinearSplit>(mask.specs.at(n.name));
        sn.co = spec.keep_out;
        sn.ci = spec.keep_in.size();
        const Tensor& w = params.at(n.name + "/weight");
        Tensor sw({sn.co, sn.ci});
        for (std::size_t co = 0; co < sn.co; ++co)
          for (std::size_t i = 0; i < sn.ci; ++i)
            sw.data[co * sn.ci + i] = w.data[co * n.ci + spec.keep_in[i]];
        slim.params[n.name + "/weight"] = std::move(sw);
        if (n.bias) {
          const Tensor& b = params.at(n.name + "/bias");
          Tensor sb({sn.co});
          for (std::size_t co = 0; co < sn.co; ++co) sb.data[co] = b.data[co];
          slim.params[n.name + "/bias"] = std::move(sb);
        }
        break;
      }
      case LayerKind::BatchNorm: {
        const auto& spec = std::get<BnSplit>(mask.specs.at(n.name));
        sn.c = spec.keep.size();
        for (const char* t :
             {"scale", "shift", "running_mean", "running_var"}) {
          const Tensor& src = params.at(n.name + "/" + t);
          Tensor dst({sn.c});
          for (std::size_t i = 0; i < sn.c; ++i)
            dst.data[i] = src.data[spec.keep[i]];
          slim.params[n.name + std::string("/") + t] = std::move(dst);
        }
        break;
      }
      default:
        break;
    }
    slim.graph.nodes.push_back(std::move(sn));
  }
  validate_and_shape(slim.graph);
  return slim;
}

ProfileReport profile_network(const NetworkGraph& g) {
  auto shapes = validate_and_shape(g);
  ProfileReport report;
  for (const auto& n : g.nodes) {
    LayerProfile lp;
    lp.name = n.name;
    const NodeShape out = shapes.at(n.name);
    auto out_elems = [&] {
      std::uint64_t e = 1;
      for (std::size_t d : out) e *= d;
      return e;
    }();
    switch (n.kind) {
      case LayerKind::Input:
        break;
      case LayerKind::Conv: {
        const std::uint64_t hw = out[1] * out[2];
        lp.ops = 2ull * n.co * n.ci * n.k * n.k * hw +
                 (n.bias ? hw * n.co : 0);
        lp.params = n.co * n.ci * n.k * n.k + (n.bias ? n.co : 0);
        break;
      }
      case LayerKind::Linear:
        lp.ops = 2ull * n.co * n.ci + (n.bias ? n.co : 0);
        lp.params = static_cast<std::uint64_t>(n.co) * n.ci +
                    (n.bias ? n.co : 0);
        break;
      case LayerKind::BatchNorm:
        lp.ops = 2ull * out_elems;  // scale + shift per element (eval mode)
        lp.params = 4ull * n.c;
        break;
      case LayerKind::ReLU:
      case LayerKind::Add:
        lp.ops = out_elems;
        break;
      case LayerKind::Gap: {
        const NodeShape in = shapes.at(n.preds[0]);
        lp.ops = static_cast<std::uint64_t>(in[0]) * in[1] * in[2];
        break;
      }
      case LayerKind::MaxPool:
        lp.ops = out_elems * n.k * n.k;  // one compare per window slot
        break;
      case LayerKind::Concat:
        lp.ops = 0;  // pure copy
        break;
    }
    report.total_ops += lp.ops;
    report.total_params += lp.params;
    report.layers.push_back(std::move(lp));
  }
  return report;
}

}  // namespace kevo
