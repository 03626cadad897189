#pragma once

#include <algorithm>
#include <vector>

#include "kevo/tensor.hpp"

namespace kevo {

/// In-memory labeled image set, samples stored CHW back to back.
struct Dataset {
  std::size_t c = 0, h = 0, w = 0;
  std::vector<float> images;
  std::vector<std::size_t> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t sample_elems() const { return c * h * w; }

  Tensor batch(const std::vector<std::size_t>& idx) const {
    Tensor out({idx.size(), c, h, w});
    const std::size_t se = sample_elems();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] >= size())
        throw DataError("dataset: sample index out of range");
      std::copy_n(images.data() + idx[i] * se, se, out.data.data() + i * se);
    }
    return out;
  }

  std::vector<std::size_t> batch_labels(
      const std::vector<std::size_t>& idx) const {
    std::vector<std::size_t> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
    return out;
  }

  std::size_t class_count() const {
    std::size_t mx = 0;
    for (std::size_t l : labels) mx = std::max(mx, l);
    return labels.empty() ? 0 : mx + 1;
  }
};

}  // namespace kevo
