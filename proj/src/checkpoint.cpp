#include "kevo/checkpoint.hpp"

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace kevo {

namespace {

std::uint32_t crc32_update(std::uint32_t crc, const unsigned char* p,
                           std::size_t n) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k)
        c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  crc = ~crc;
  for (std::size_t i = 0; i < n; ++i)
    crc = table[(crc ^ p[i]) & 0xffu] ^ (crc >> 8);
  return ~crc;
}

struct Writer {
  std::string buf;

  void bytes(const void* p, std::size_t n) {
    buf.append(static_cast<const char*>(p), n);
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    u32(static_cast<std::uint32_t>(v));
    u32(static_cast<std::uint32_t>(v >> 32));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
};

struct Reader {
  const unsigned char* p;
  std::size_t n, off = 0;
  std::string path;

  void need(std::size_t k) const {
    if (off + k > n)
      throw DataError("checkpoint '" + path + "': truncated at byte " +
                      std::to_string(off));
  }
  std::uint8_t u8() {
    need(1);
    return p[off++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = std::uint32_t(p[off]) | (std::uint32_t(p[off + 1]) << 8) |
                      (std::uint32_t(p[off + 2]) << 16) |
                      (std::uint32_t(p[off + 3]) << 24);
    off += 4;
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t lo = u32();
    return lo | (std::uint64_t(u32()) << 32);
  }
  std::string str() {
    std::uint32_t k = u32();
    need(k);
    std::string s(reinterpret_cast<const char*>(p + off), k);
    off += k;
    return s;
  }
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  Writer w;
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& [name, t] : ckpt.params) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) w.u64(d);
    w.u8(0);  // dtype tag: f32
    for (float v : t.data) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      w.u32(bits);
    }
  }
  w.str(ckpt.mask ? mask_to_text(*ckpt.mask) : std::string());
  w.str(ckpt.meta);

  const std::uint32_t crc = crc32_update(
      0, reinterpret_cast<const unsigned char*>(w.buf.data()), w.buf.size());
  w.u32(crc);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("checkpoint: cannot write " + tmp);
    f.write("KEVO", 4);
    f.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
    if (!f) throw DataError("checkpoint: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("checkpoint: cannot rename " + tmp + " -> " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open " + path);
  std::string raw((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  if (raw.size() < 12 || raw.compare(0, 4, "KEVO") != 0)
    throw DataError("checkpoint '" + path + "': bad magic");

  const auto* body = reinterpret_cast<const unsigned char*>(raw.data()) + 4;
  const std::size_t body_len = raw.size() - 4;
  const std::size_t payload_len = body_len - 4;
  std::uint32_t stored = std::uint32_t(body[payload_len]) |
                         (std::uint32_t(body[payload_len + 1]) << 8) |
                         (std::uint32_t(body[payload_len + 2]) << 16) |
                         (std::uint32_t(body[payload_len + 3]) << 24);
  if (crc32_update(0, body, payload_len) != stored)
    throw NumericError("checkpoint '" + path + "': checksum mismatch");

  Reader r{body, payload_len, 0, path};
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw DataError("checkpoint '" + path + "': version " +
                    std::to_string(version) + " unsupported (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  Checkpoint ckpt;
  const std::uint32_t ntensors = r.u32();
  for (std::uint32_t i = 0; i < ntensors; ++i) {
    std::string name = r.str();
    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.u64());
    const std::uint8_t dtype = r.u8();
    if (dtype != 0)
      throw DataError("checkpoint '" + path + "': unknown dtype tag " +
                      std::to_string(dtype));
    Tensor t(shape);
    for (auto& v : t.data) {
      std::uint32_t bits = r.u32();
      std::memcpy(&v, &bits, 4);
    }
    ckpt.params.emplace(std::move(name), std::move(t));
  }
  const std::string mask_text = r.str();
  if (!mask_text.empty()) ckpt.mask = parse_mask_text(mask_text);
  ckpt.meta = r.str();
  return ckpt;
}

}  // namespace kevo
