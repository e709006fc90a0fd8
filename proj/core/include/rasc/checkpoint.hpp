#pragma once

#include <span>
#include <string>
#include <vector>

#include "rasc/digest.hpp"
#include "rasc/tensor.hpp"

namespace rasc {

inline constexpr char kCheckpointMagic[] = "RASCKPT1";

struct CheckpointRecord {
  std::string name;
  Tensor value;
};

// magic "RASCKPT1", 8-byte config hash, then records until end of file:
//   u32 name length, name bytes, u8 precision (0 f32, 1 f64), u32 rank,
//   rank x u64 dims, little-endian values.
struct Checkpoint {
  Digest8 config_hash{};
  std::vector<CheckpointRecord> records;

  const CheckpointRecord* find(const std::string& name) const;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace rasc
