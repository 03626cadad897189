#pragma once

#include <cstdint>
#include <string>

#include "kevo/dataset.hpp"

namespace kevo {

/// IDX ubyte pair (big-endian magic + dims): images 0x00000803, labels
/// 0x00000801. Pixels are scaled to [0,1]; samples come out 1xHxW.
/// Errors are distinct: bad magic, truncation (expected vs. actual bytes),
/// image/label count mismatch.
Dataset load_idx_pair(const std::string& images_path,
                      const std::string& labels_path);

/// Seeded Gaussian class clusters: one uniform [-1,1] center image per class
/// (stream "blobs/center/<class>"), samples = center + N(0, noise_std)
/// (stream "blobs/<split>/<class>/<sample>"). Identical bytes per
/// (spec, split) across runs.
struct BlobSpec {
  std::size_t classes = 4;
  std::size_t per_class = 25;
  std::size_t c = 1, h = 8, w = 8;
  double noise_std = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

Dataset synthetic_blobs(const BlobSpec& spec, const std::string& split);

/// CSV manifest of raw float32-LE CHW files: one "path,label" pair per line
/// (optionally with a "path,label" header). Relative paths resolve against
/// the manifest's directory.
Dataset load_tensor_manifest(const std::string& csv_path, std::size_t c,
                             std::size_t h, std::size_t w);

}  // namespace kevo
