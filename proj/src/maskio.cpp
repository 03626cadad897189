#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "kevo/split.hpp"

namespace kevo {
namespace {

// Mask file schema:
//   kevo-mask v1
//   technique kels|wels
//   split_rate <float>
//   conv <name> keep_out=<n> keep_in=<i,j,...>
//   linear <name> keep_out=<n> keep_in=<i,j,...>
//   bn <name> keep=<i,j,...>
//   bits <name> nweight=<n> nbias=<n> weight=<b64> [bias=<b64>]

constexpr char kB64[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(const std::vector<std::uint8_t>& bits) {
  // pack bits LSB-first into bytes, then base64
  std::vector<std::uint8_t> bytes((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) bytes[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  std::string out;
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    std::uint32_t v = bytes[i] << 16;
    if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
    if (i + 2 < bytes.size()) v |= bytes[i + 2];
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += i + 1 < bytes.size() ? kB64[(v >> 6) & 63] : '=';
    out += i + 2 < bytes.size() ? kB64[v & 63] : '=';
  }
  return out.empty() ? "=" : out;
}

std::vector<std::uint8_t> b64_decode(const std::string& s, std::size_t nbits) {
  std::vector<std::uint8_t> bytes;
  std::uint32_t buf = 0;
  int have = 0;
  for (char c : s) {
    if (c == '=') break;
    const char* p = std::strchr(kB64, c);
    if (!p) throw DataError("mask file: bad base64 character");
    buf = (buf << 6) | static_cast<std::uint32_t>(p - kB64);
    have += 6;
    if (have >= 8) {
      have -= 8;
      bytes.push_back(static_cast<std::uint8_t>((buf >> have) & 0xff));
    }
  }
  std::vector<std::uint8_t> bits(nbits, 0);
  for (std::size_t i = 0; i < nbits; ++i) {
    if (i / 8 >= bytes.size())
      throw DataError("mask file: bitset shorter than declared length");
    bits[i] = (bytes[i / 8] >> (i % 8)) & 1u;
  }
  return bits;
}

std::string join(const std::vector<std::size_t>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::vector<std::size_t> parse_indices(const std::string& s) {
  std::vector<std::size_t> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(std::stoull(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

std::map<std::string, std::string> parse_kv(std::istringstream& ls) {
  std::map<std::string, std::string> kv;
  std::string tok;
  while (ls >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw DataError("mask file: bad token '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

}  // namespace

std::string mask_to_text(const SplitMask& mask) {
  std::ostringstream os;
  os << "kevo-mask v1\n";
  os << "technique "
     << (mask.technique == SplitTechnique::KELS ? "kels" : "wels") << '\n';
  os.precision(17);
  os << "split_rate " << mask.split_rate << '\n';
  for (const auto& [name, spec] : mask.specs) {
    if (const auto* cs = std::get_if<ConvSplit>(&spec)) {
      os << "conv " << name << " keep_out=" << cs->keep_out
         << " keep_in=" << join(cs->keep_in) << '\n';
    } else if (const auto* lsp = std::get_if<LinearSplit>(&spec)) {
      os << "linear " << name << " keep_out=" << lsp->keep_out
         << " keep_in=" << join(lsp->keep_in) << '\n';
    } else if (const auto* bs = std::get_if<BnSplit>(&spec)) {
      os << "bn " << name << " keep=" << join(bs->keep) << '\n';
    } else if (const auto* wb = std::get_if<WeightBitset>(&spec)) {
      os << "bits " << name << " nweight=" << wb->weight_bits.size()
         << " nbias=" << wb->bias_bits.size()
         << " weight=" << b64_encode(wb->weight_bits);
      if (!wb->bias_bits.empty()) os << " bias=" << b64_encode(wb->bias_bits);
      os << '\n';
    }
  }
  return os.str();
}

SplitMask parse_mask_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  SplitMask mask;
  bool header = false, tech = false, rate = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (!header) {
      std::string ver;
      if (tok != "kevo-mask" || !(ls >> ver) || ver != "v1")
        throw DataError("mask file: expected header 'kevo-mask v1'");
      header = true;
      continue;
    }
    if (tok == "technique") {
      std::string t;
      ls >> t;
      if (t == "kels")
        mask.technique = SplitTechnique::KELS;
      else if (t == "wels")
        mask.technique = SplitTechnique::WELS;
      else
        throw DataError("mask file: unknown technique '" + t + "'");
      tech = true;
    } else if (tok == "split_rate") {
      ls >> mask.split_rate;
      rate = true;
    } else if (tok == "conv" || tok == "linear") {
      std::string name;
      ls >> name;
      auto kv = parse_kv(ls);
      if (tok == "conv") {
        ConvSplit cs;
        cs.keep_out = std::stoull(kv.at("keep_out"));
        cs.keep_in = parse_indices(kv.at("keep_in"));
        mask.specs[name] = cs;
      } else {
        LinearSplit lsp;
        lsp.keep_out = std::stoull(kv.at("keep_out"));
        lsp.keep_in = parse_indices(kv.at("keep_in"));
        mask.specs[name] = lsp;
      }
    } else if (tok == "bn") {
      std::string name;
      ls >> name;
      auto kv = parse_kv(ls);
      BnSplit bs;
      bs.keep = parse_indices(kv.at("keep"));
      mask.specs[name] = bs;
    } else if (tok == "bits") {
      std::string name;
      ls >> name;
      auto kv = parse_kv(ls);
      WeightBitset wb;
      const std::size_t nw = std::stoull(kv.at("nweight"));
      const std::size_t nb = std::stoull(kv.at("nbias"));
      wb.weight_bits = b64_decode(kv.at("weight"), nw);
      if (nb) wb.bias_bits = b64_decode(kv.at("bias"), nb);
      mask.specs[name] = wb;
    } else {
      throw DataError("mask file: unknown record '" + tok + "'");
    }
  }
  if (!header || !tech || !rate)
    throw DataError("mask file: incomplete header");
  return mask;
}

void save_mask_file(const SplitMask& mask, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw DataError("mask file: cannot write '" + tmp + "'");
    out << mask_to_text(mask);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("mask file: rename to '" + path + "' failed");
}

SplitMask load_mask_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("mask file: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_mask_text(buf.str());
}

}  // namespace kevo
