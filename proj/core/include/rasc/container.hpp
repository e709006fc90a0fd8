#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rasc/digest.hpp"

namespace rasc {

inline constexpr char kContainerMagic[] = "RASC0001";
inline constexpr std::uint8_t kCustomLambda = 0xFF;

// Little-endian layout:
//   magic[8] model_hash[8] u32 sample_rate u64 samples u32 frames u8 lambda_index
//   u32 z_length z_bytes u8 slice_count { u32 length bytes }*
struct Container {
  Digest8 model_hash{};
  std::uint32_t sample_rate = 16000;
  std::uint64_t samples = 0;
  std::uint32_t frames = 0;
  std::uint8_t lambda_index = kCustomLambda;
  std::vector<std::uint8_t> z_stream;
  std::vector<std::vector<std::uint8_t>> slice_streams;

  std::size_t payload_bytes() const;
  bool operator==(const Container&) const = default;
};

std::vector<std::uint8_t> serialize_container(const Container& c);
// kBitstream on bad magic, truncation or trailing bytes.
Container parse_container(std::span<const std::uint8_t> bytes);

void save_container(const std::string& path, const Container& c);
Container load_container(const std::string& path);

std::size_t header_bytes(const Container& c);

}  // namespace rasc
