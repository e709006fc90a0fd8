#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rasc {

inline constexpr int kProbabilityBits = 16;
inline constexpr std::uint32_t kProbabilityTotal = 1u << kProbabilityBits;

// Quantized cumulative frequencies over the symbols offset .. offset+size-1,
// optionally followed by an escape bucket for everything outside that range.
struct CdfTable {
  std::int64_t offset = 0;
  std::vector<std::uint32_t> cdf;  // cdf[0] = 0, cdf.back() = 65536
  bool escape = false;

  std::int64_t size() const { return static_cast<std::int64_t>(cdf.size()) - 1 - (escape ? 1 : 0); }
  std::int64_t buckets() const { return static_cast<std::int64_t>(cdf.size()) - 1; }
  std::uint32_t frequency(std::int64_t index) const { return cdf[index + 1] - cdf[index]; }
  // Probability the table assigns to `symbol` (escaped symbols get the
  // escape bucket times the tail code's 2^-bits).
  double probability(std::int64_t symbol) const;

  // Largest-remainder quantization of pmf (plus escape_mass when `escape`)
  // to frequencies summing to 65536, each at least 1.
  static CdfTable from_pmf(std::int64_t offset, std::span<const double> pmf, bool escape,
                           double escape_mass = 0.0);
  void validate() const;
};

// Bits of the escape tail for a symbol outside the table range.
int escape_tail_bits(const CdfTable& table, std::int64_t symbol);

// Carry-propagating range coder with a 64-bit low register, a 48-bit coding
// window and 16-bit probabilities.
class RangeEncoder {
 public:
  void encode(std::uint32_t cum_low, std::uint32_t frequency);
  // Throws kInvalidArgument for a symbol outside a table without escape.
  void encode_symbol(const CdfTable& table, std::int64_t symbol);
  void encode_bit(int bit);
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint64_t range_ = (std::uint64_t{1} << 48) - 1;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> data);

  std::int64_t decode_symbol(const CdfTable& table);
  int decode_bit();
  // Throws kDecode unless every byte was consumed.
  void finish() const;

 private:
  std::uint32_t target();
  void consume(std::uint32_t cum_low, std::uint32_t frequency);
  std::uint8_t next_byte();

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::uint64_t code_ = 0;
  std::uint64_t range_ = (std::uint64_t{1} << 48) - 1;
  std::uint64_t step_ = 0;
};

}  // namespace rasc
