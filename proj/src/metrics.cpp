#include "kevo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "kevo/rng.hpp"

namespace kevo {

double top1_accuracy(const Tensor& logits,
                     const std::vector<std::size_t>& labels) {
  const std::size_t N = logits.shape[0], C = logits.shape[1];
  if (labels.size() != N)
    throw DimensionError("top1: label count != batch");
  std::size_t hits = 0;
  for (std::size_t n = 0; n < N; ++n) {
    const float* row = logits.data.data() + n * C;
    std::size_t best = 0;
    for (std::size_t c = 1; c < C; ++c)
      if (row[c] > row[best]) best = c;
    if (best == labels[n]) ++hits;
  }
  return N ? static_cast<double>(hits) / static_cast<double>(N) : 0.0;
}

namespace {

double dist2(const Tensor& e, std::size_t i, std::size_t j) {
  const std::size_t D = e.shape[1];
  double s = 0.0;
  for (std::size_t d = 0; d < D; ++d) {
    const double diff = static_cast<double>(e.data[i * D + d]) -
                        static_cast<double>(e.data[j * D + d]);
    s += diff * diff;
  }
  return s;
}

}  // namespace

double recall_at_k(const Tensor& embeddings,
                   const std::vector<std::size_t>& labels, std::size_t k) {
  const std::size_t N = embeddings.shape[0];
  if (N < 2) throw DimensionError("recall_at_k: need at least 2 points");
  if (labels.size() != N)
    throw DimensionError("recall_at_k: label count != batch");
  std::size_t hits = 0;
  std::vector<std::size_t> order(N);
  for (std::size_t q = 0; q < N; ++q) {
    std::size_t m = 0;
    for (std::size_t i = 0; i < N; ++i)
      if (i != q) order[m++] = i;
    std::stable_sort(order.begin(), order.begin() + m,
                     [&](std::size_t a, std::size_t b) {
                       const double da = dist2(embeddings, q, a);
                       const double db = dist2(embeddings, q, b);
                       if (da != db) return da < db;
                       return a < b;
                     });
    const std::size_t kk = std::min(k, m);
    for (std::size_t i = 0; i < kk; ++i) {
      if (labels[order[i]] == labels[q]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(N);
}

std::vector<std::size_t> kmeans_assign(const Tensor& embeddings,
                                       std::size_t k, std::uint64_t seed) {
  const std::size_t N = embeddings.shape[0], D = embeddings.shape[1];
  if (k < 1) throw ConfigError("kmeans: k must be >= 1");
  k = std::min(k, N);
  SeededRng rng(seed, "kmeans++");

  // k-means++ seeding
  std::vector<std::vector<double>> centers;
  centers.reserve(k);
  std::size_t first = rng.next_below(N);
  centers.push_back(std::vector<double>(embeddings.data.begin() + first * D,
                                        embeddings.data.begin() + (first + 1) * D));
  std::vector<double> d2(N);
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      double best = 1e300;
      for (const auto& c : centers) {
        double s = 0.0;
        for (std::size_t d = 0; d < D; ++d) {
          const double diff = embeddings.data[i * D + d] - c[d];
          s += diff * diff;
        }
        best = std::min(best, s);
      }
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double r = rng.next_unit() * total, acc = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        acc += d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.next_below(N);
    }
    centers.push_back(std::vector<double>(embeddings.data.begin() + pick * D,
                                          embeddings.data.begin() + (pick + 1) * D));
  }

  std::vector<std::size_t> assign(N, 0);
  for (int iter = 0; iter < 100; ++iter) {
    for (std::size_t i = 0; i < N; ++i) {
      double best = 1e300;
      std::size_t bj = 0;
      for (std::size_t j = 0; j < centers.size(); ++j) {
        double s = 0.0;
        for (std::size_t d = 0; d < D; ++d) {
          const double diff = embeddings.data[i * D + d] - centers[j][d];
          s += diff * diff;
        }
        if (s < best) {
          best = s;
          bj = j;
        }
      }
      assign[i] = bj;
    }
    std::vector<std::vector<double>> next(centers.size(),
                                          std::vector<double>(D, 0.0));
    std::vector<std::size_t> count(centers.size(), 0);
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t d = 0; d < D; ++d)
        next[assign[i]][d] += embeddings.data[i * D + d];
      ++count[assign[i]];
    }
    for (std::size_t j = 0; j < next.size(); ++j) {
      if (count[j] == 0) {
        // reseed from the point farthest from its center
        std::size_t far = 0;
        double fd = -1.0;
        for (std::size_t i = 0; i < N; ++i) {
          double s = 0.0;
          for (std::size_t d = 0; d < D; ++d) {
            const double diff = embeddings.data[i * D + d] -
                                centers[assign[i]][d];
            s += diff * diff;
          }
          if (s > fd) {
            fd = s;
            far = i;
          }
        }
        for (std::size_t d = 0; d < D; ++d)
          next[j][d] = embeddings.data[far * D + d];
      } else {
        for (std::size_t d = 0; d < D; ++d)
          next[j][d] /= static_cast<double>(count[j]);
      }
    }
    double shift = 0.0, norm = 0.0;
    for (std::size_t j = 0; j < centers.size(); ++j) {
      for (std::size_t d = 0; d < D; ++d) {
        const double diff = next[j][d] - centers[j][d];
        shift += diff * diff;
        norm += centers[j][d] * centers[j][d];
      }
    }
    centers = std::move(next);
    if (shift <= 1e-6 * std::max(norm, 1e-12)) break;
  }
  return assign;
}

double nmi_from_assignments(const std::vector<std::size_t>& a,
                            const std::vector<std::size_t>& b) {
  if (a.size() != b.size() || a.empty())
    throw DimensionError("nmi: assignment lengths differ or empty");
  const double n = static_cast<double>(a.size());
  std::map<std::size_t, std::size_t> ca, cb;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    ++joint[{a[i], b[i]}];
  }
  auto entropy = [&](const std::map<std::size_t, std::size_t>& c) {
    double h = 0.0;
    for (const auto& [_, cnt] : c) {
      const double p = cnt / n;
      h -= p * std::log(p);
    }
    return h;
  };
  const double ha = entropy(ca), hb = entropy(cb);
  if (ha == 0.0 || hb == 0.0) {
    // identical single-block clusterings count as perfect agreement
    return (ca.size() == 1 && cb.size() == 1) ? 1.0 : 0.0;
  }
  double mi = 0.0;
  for (const auto& [key, cnt] : joint) {
    const double pij = cnt / n;
    const double pi = ca.at(key.first) / n;
    const double pj = cb.at(key.second) / n;
    mi += pij * std::log(pij / (pi * pj));
  }
  return mi / std::sqrt(ha * hb);
}

double nmi_score(const Tensor& embeddings,
                 const std::vector<std::size_t>& labels, std::size_t k,
                 std::uint64_t seed) {
  auto clusters = kmeans_assign(embeddings, k, seed);
  return nmi_from_assignments(labels, clusters);
}

std::vector<HypothesisStat> hypothesis_mean_abs(const NetworkGraph& g,
                                                const ParamSet& params,
                                                const SplitMask& mask) {
  std::vector<HypothesisStat> stats;
  for (const auto& n : g.nodes) {
    if (n.kind != LayerKind::Conv && n.kind != LayerKind::Linear) continue;
    auto it = mask.specs.find(n.name);
    if (it == mask.specs.end())
      throw DimensionError("hypothesis_mean_abs: mask misses '" + n.name +
                           "'");
    std::vector<std::uint8_t> wbits, bbits;
    fit_weight_bits(n, it->second, wbits, bbits);
    const Tensor& w = params.at(n.name + "/weight");
    if (wbits.size() != w.numel())
      throw DimensionError("hypothesis_mean_abs: mask size mismatch at '" +
                           n.name + "'");
    double fit_sum = 0.0, reset_sum = 0.0;
    std::size_t fit_n = 0, reset_n = 0;
    for (std::size_t i = 0; i < wbits.size(); ++i) {
      const double v = std::abs(static_cast<double>(w.data[i]));
      if (wbits[i]) {
        fit_sum += v;
        ++fit_n;
      } else {
        reset_sum += v;
        ++reset_n;
      }
    }
    HypothesisStat s;
    s.layer = n.name;
    s.fit_mean_abs = fit_n ? fit_sum / fit_n : 0.0;
    if (reset_n) s.reset_mean_abs = reset_sum / reset_n;
    stats.push_back(std::move(s));
  }
  return stats;
}

std::vector<std::uint8_t> flatten_mask_bits(const NetworkGraph& g,
                                            const SplitMask& mask) {
  std::vector<std::uint8_t> bits;
  for (const auto& n : g.nodes) {
    if (n.kind != LayerKind::Conv && n.kind != LayerKind::Linear) continue;
    std::vector<std::uint8_t> wbits, bbits;
    fit_weight_bits(n, mask.specs.at(n.name), wbits, bbits);
    bits.insert(bits.end(), wbits.begin(), wbits.end());
    bits.insert(bits.end(), bbits.begin(), bbits.end());
  }
  return bits;
}

H2dSeries h2d_metrics(const std::vector<std::vector<std::uint8_t>>& series) {
  if (series.size() < 2)
    throw DimensionError("h2d: need at least 2 snapshots");
  const std::size_t d = series[0].size();
  for (const auto& s : series)
    if (s.size() != d)
      throw DimensionError("h2d: snapshot length mismatch");
  auto hamming = [d](const std::vector<std::uint8_t>& u,
                     const std::vector<std::uint8_t>& v) {
    std::size_t diff = 0;
    for (std::size_t i = 0; i < u.size(); ++i) diff += u[i] != v[i];
    return static_cast<double>(diff) / static_cast<double>(d);
  };
  H2dSeries out;
  for (std::size_t g = 1; g < series.size(); ++g) {
    out.s_h2d.push_back(hamming(series[g - 1], series[g]));
    out.c_h2d.push_back(hamming(series[0], series[g]));
  }
  return out;
}

}  // namespace kevo
