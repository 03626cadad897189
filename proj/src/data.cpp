#include "kevo/data.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kevo/rng.hpp"

namespace kevo {

namespace {

std::vector<unsigned char> read_all_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open file: " + path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(f),
                                    std::istreambuf_iterator<char>());
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

}  // namespace

Dataset load_idx_pair(const std::string& images_path,
                      const std::string& labels_path) {
  const auto img = read_all_bytes(images_path);
  if (img.size() < 16)
    throw DataError("idx images '" + images_path +
                    "': truncated header, expected 16 bytes, got " +
                    std::to_string(img.size()));
  const std::uint32_t imagic = be32(img, 0);
  if (imagic != 0x00000803u) {
    std::ostringstream os;
    os << "idx images '" << images_path << "': bad magic 0x" << std::hex
       << imagic << ", expected 0x803";
    throw DataError(os.str());
  }
  const std::size_t n = be32(img, 4), h = be32(img, 8), w = be32(img, 12);
  const std::size_t expected = 16 + n * h * w;
  if (img.size() != expected)
    throw DataError("idx images '" + images_path + "': truncated, expected " +
                    std::to_string(expected) + " bytes, got " +
                    std::to_string(img.size()));

  const auto lab = read_all_bytes(labels_path);
  if (lab.size() < 8)
    throw DataError("idx labels '" + labels_path +
                    "': truncated header, expected 8 bytes, got " +
                    std::to_string(lab.size()));
  const std::uint32_t lmagic = be32(lab, 0);
  if (lmagic != 0x00000801u) {
    std::ostringstream os;
    os << "idx labels '" << labels_path << "': bad magic 0x" << std::hex
       << lmagic << ", expected 0x801";
    throw DataError(os.str());
  }
  const std::size_t ln = be32(lab, 4);
  const std::size_t lexpected = 8 + ln;
  if (lab.size() != lexpected)
    throw DataError("idx labels '" + labels_path + "': truncated, expected " +
                    std::to_string(lexpected) + " bytes, got " +
                    std::to_string(lab.size()));
  if (ln != n)
    throw DataError("idx pair: image count " + std::to_string(n) +
                    " != label count " + std::to_string(ln));

  Dataset d;
  d.c = 1;
  d.h = h;
  d.w = w;
  d.images.resize(n * h * w);
  for (std::size_t i = 0; i < n * h * w; ++i)
    d.images[i] = static_cast<float>(img[16 + i]) / 255.f;
  d.labels.assign(lab.begin() + 8, lab.end());
  return d;
}

void BlobSpec::validate() const {
  if (classes < 2) throw ConfigError("synthetic-blobs: classes must be >= 2");
  if (per_class < 1)
    throw ConfigError("synthetic-blobs: per_class must be >= 1");
  if (c * h * w == 0)
    throw ConfigError("synthetic-blobs: sample shape must be non-empty");
  if (!(noise_std >= 0.0))
    throw ConfigError("synthetic-blobs: noise_std must be >= 0");
}

Dataset synthetic_blobs(const BlobSpec& spec, const std::string& split) {
  spec.validate();
  const std::size_t se = spec.c * spec.h * spec.w;
  Dataset d;
  d.c = spec.c;
  d.h = spec.h;
  d.w = spec.w;
  d.images.resize(spec.classes * spec.per_class * se);
  d.labels.resize(spec.classes * spec.per_class);

  auto gauss = [](SeededRng& rng) {
    // Box-Muller, first variate only
    double u1 = rng.next_unit(), u2 = rng.next_unit();
    if (u1 <= 0.0) u1 = 1e-12;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  };

  std::size_t out = 0;
  for (std::size_t k = 0; k < spec.classes; ++k) {
    SeededRng crng(spec.seed, "blobs/center/" + std::to_string(k));
    std::vector<float> center(se);
    for (std::size_t i = 0; i < se; ++i)
      center[i] = static_cast<float>(crng.uniform(-1.0, 1.0));
    for (std::size_t s = 0; s < spec.per_class; ++s) {
      SeededRng srng(spec.seed, "blobs/" + split + "/" + std::to_string(k) +
                                    "/" + std::to_string(s));
      for (std::size_t i = 0; i < se; ++i)
        d.images[out * se + i] =
            center[i] + static_cast<float>(spec.noise_std * gauss(srng));
      d.labels[out] = k;
      ++out;
    }
  }
  return d;
}

Dataset load_tensor_manifest(const std::string& csv_path, std::size_t c,
                             std::size_t h, std::size_t w) {
  std::ifstream f(csv_path);
  if (!f) throw DataError("cannot open manifest: " + csv_path);
  const auto base = std::filesystem::path(csv_path).parent_path();
  const std::size_t se = c * h * w;
  Dataset d;
  d.c = c;
  d.h = h;
  d.w = w;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw DataError("manifest " + csv_path + " line " +
                      std::to_string(lineno) + ": expected 'path,label'");
    std::string path = line.substr(0, comma);
    std::string labstr = line.substr(comma + 1);
    if (lineno == 1 && path == "path") continue;  // header row
    std::size_t label;
    try {
      label = std::stoull(labstr);
    } catch (const std::exception&) {
      throw DataError("manifest " + csv_path + " line " +
                      std::to_string(lineno) + ": bad label '" + labstr + "'");
    }
    std::filesystem::path p(path);
    if (p.is_relative()) p = base / p;
    std::ifstream tf(p, std::ios::binary);
    if (!tf) throw DataError("manifest: cannot open tensor file: " + p.string());
    std::vector<float> buf(se);
    tf.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(se * sizeof(float)));
    if (static_cast<std::size_t>(tf.gcount()) != se * sizeof(float))
      throw DataError("tensor file '" + p.string() + "': truncated, expected " +
                      std::to_string(se * sizeof(float)) + " bytes, got " +
                      std::to_string(tf.gcount()));
    d.images.insert(d.images.end(), buf.begin(), buf.end());
    d.labels.push_back(label);
  }
  if (d.labels.empty())
    throw DataError("manifest " + csv_path + ": no samples");
  return d;
}

}  // namespace kevo
