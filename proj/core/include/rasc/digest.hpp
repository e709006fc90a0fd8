#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace rasc {

using Digest8 = std::array<std::uint8_t, 8>;

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data);

// First eight bytes of the SHA-256 digest.
Digest8 digest8(std::span<const std::uint8_t> data);

std::string hex(std::span<const std::uint8_t> bytes);

}  // namespace rasc
