#pragma once

#include <optional>
#include <string>

#include "kevo/graph.hpp"
#include "kevo/split.hpp"

namespace kevo {

/// Binary checkpoint: "KEVO" magic, u32 version, per-tensor records
/// (u32 name length + name, u32 rank, u64-LE dims, u8 dtype tag, raw f32-LE
/// payload), optional mask section, metadata blob (config echo + generation
/// index), trailing CRC32 over everything after the magic. Writes are atomic
/// (temp file + rename); load rejects version mismatch and checksum failure.
struct Checkpoint {
  ParamSet params;
  std::optional<SplitMask> mask;
  std::string meta;  // JSON text: config echo, generation index
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace kevo
