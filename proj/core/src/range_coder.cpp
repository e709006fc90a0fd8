#include "rasc/range_coder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "rasc/error.hpp"

namespace rasc {

namespace {

constexpr std::uint64_t kTop = std::uint64_t{1} << 48;
constexpr std::uint64_t kBottom = std::uint64_t{1} << 40;
constexpr int kMaxTailPrefix = 62;

// Escaped symbols are sent as a sign bit and an order-0 Exp-Golomb value.
struct Tail {
  int sign;
  std::uint64_t value;
};

Tail escape_tail(const CdfTable& t, std::int64_t symbol) {
  if (symbol < t.offset) return {0, static_cast<std::uint64_t>(t.offset - symbol - 1)};
  return {1, static_cast<std::uint64_t>(symbol - (t.offset + t.size()))};
}

}  // namespace

double CdfTable::probability(std::int64_t symbol) const {
  const std::int64_t i = symbol - offset;
  if (i >= 0 && i < size()) return static_cast<double>(frequency(i)) / kProbabilityTotal;
  if (!escape) return 0.0;
  return static_cast<double>(frequency(size())) / kProbabilityTotal *
         std::ldexp(1.0, -escape_tail_bits(*this, symbol));
}

int escape_tail_bits(const CdfTable& table, std::int64_t symbol) {
  const Tail tail = escape_tail(table, symbol);
  const int width = std::bit_width(tail.value + 1);
  return 1 + 2 * width - 1;
}

CdfTable CdfTable::from_pmf(std::int64_t offset, std::span<const double> pmf, bool escape,
                            double escape_mass) {
  std::vector<double> p(pmf.begin(), pmf.end());
  if (escape) p.push_back(escape_mass);
  const std::size_t n = p.size();
  require(n >= 1 && n < kProbabilityTotal, ErrorKind::kInvalidArgument,
          "cdf table needs between 1 and 65535 buckets, got " + std::to_string(n));
  double total = 0.0;
  for (double v : p) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::kNumeric, "pmf entries must be finite and >= 0");
    total += v;
  }
  require(total > 0.0, ErrorKind::kNumeric, "pmf has no mass");

  std::vector<std::int64_t> freq(n);
  std::vector<double> rem(n);
  std::int64_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double exact = p[i] / total * kProbabilityTotal;
    freq[i] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(exact)));
    rem[i] = exact - std::floor(exact);
    used += freq[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::int64_t diff = static_cast<std::int64_t>(kProbabilityTotal) - used;
  if (diff > 0) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; diff > 0; k = (k + 1) % n, --diff) ++freq[order[k]];
  } else {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rem[a] < rem[b]; });
    while (diff < 0) {
      bool changed = false;
      for (std::size_t k = 0; k < n && diff < 0; ++k) {
        if (freq[order[k]] > 1) {
          --freq[order[k]];
          ++diff;
          changed = true;
        }
      }
      require(changed, ErrorKind::kNumeric, "cannot fit pmf into 16-bit frequencies");
    }
  }

  CdfTable t;
  t.offset = offset;
  t.escape = escape;
  t.cdf.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) t.cdf[i + 1] = t.cdf[i] + static_cast<std::uint32_t>(freq[i]);
  t.validate();
  return t;
}

void CdfTable::validate() const {
  require(cdf.size() >= 2 && cdf.front() == 0 && cdf.back() == kProbabilityTotal,
          ErrorKind::kInvalidArgument, "cdf table must run from 0 to 65536");
  for (std::size_t i = 1; i < cdf.size(); ++i) {
    require(cdf[i] > cdf[i - 1], ErrorKind::kInvalidArgument,
            "cdf table must be strictly increasing");
  }
  require(size() >= 0, ErrorKind::kInvalidArgument, "cdf table has no symbols");
}

void RangeEncoder::shift_low() {
  if (low_ < (std::uint64_t{0xFF} << 40) || low_ >= kTop) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 48);
    std::uint8_t temp = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(temp + carry));
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 40);
  }
  ++cache_size_;
  low_ = (low_ & (kBottom - 1)) << 8;
}

void RangeEncoder::encode(std::uint32_t cum_low, std::uint32_t frequency) {
  const std::uint64_t r = range_ >> kProbabilityBits;
  low_ += r * cum_low;
  range_ = r * frequency;
  while (range_ < kBottom) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode_bit(int bit) {
  constexpr std::uint32_t half = kProbabilityTotal / 2;
  encode(bit ? half : 0, half);
}

void RangeEncoder::encode_symbol(const CdfTable& table, std::int64_t symbol) {
  const std::int64_t i = symbol - table.offset;
  if (i >= 0 && i < table.size()) {
    encode(table.cdf[i], table.frequency(i));
    return;
  }
  require(table.escape, ErrorKind::kInvalidArgument,
          "symbol " + std::to_string(symbol) + " outside table range [" +
              std::to_string(table.offset) + ", " + std::to_string(table.offset + table.size() - 1) +
              "] and the table has no escape");
  const std::int64_t e = table.size();
  encode(table.cdf[e], table.frequency(e));
  const Tail tail = escape_tail(table, symbol);
  encode_bit(tail.sign);
  const std::uint64_t v = tail.value + 1;
  const int width = std::bit_width(v);
  for (int k = 1; k < width; ++k) encode_bit(0);
  for (int k = width - 1; k >= 0; --k) encode_bit(static_cast<int>((v >> k) & 1));
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 7; ++i) shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> data) : data_(data) {
  for (int i = 0; i < 7; ++i) code_ = (code_ << 8) | next_byte();
  require(code_ < kTop, ErrorKind::kDecode, "corrupt range-coded stream (bad first byte)");
}

std::uint8_t RangeDecoder::next_byte() {
  require(pos_ < data_.size(), ErrorKind::kDecode, "truncated range-coded stream");
  return data_[pos_++];
}

std::uint32_t RangeDecoder::target() {
  step_ = range_ >> kProbabilityBits;
  const std::uint64_t v = code_ / step_;
  require(v < kProbabilityTotal, ErrorKind::kDecode, "corrupt range-coded stream");
  return static_cast<std::uint32_t>(v);
}

void RangeDecoder::consume(std::uint32_t cum_low, std::uint32_t frequency) {
  code_ -= step_ * cum_low;
  range_ = step_ * frequency;
  while (range_ < kBottom) {
    range_ <<= 8;
    code_ = (code_ << 8) | next_byte();
  }
}

int RangeDecoder::decode_bit() {
  constexpr std::uint32_t half = kProbabilityTotal / 2;
  const int bit = target() >= half ? 1 : 0;
  consume(bit ? half : 0, half);
  return bit;
}

std::int64_t RangeDecoder::decode_symbol(const CdfTable& table) {
  const std::uint32_t v = target();
  auto it = std::upper_bound(table.cdf.begin(), table.cdf.end(), v);
  const std::int64_t i = std::distance(table.cdf.begin(), it) - 1;
  consume(table.cdf[i], table.frequency(i));
  if (i < table.size()) return table.offset + i;

  const int sign = decode_bit();
  int zeros = 0;
  while (decode_bit() == 0) {
    require(++zeros <= kMaxTailPrefix, ErrorKind::kDecode, "corrupt escape code");
  }
  std::uint64_t value = 1;
  for (int k = 0; k < zeros; ++k) value = (value << 1) | static_cast<std::uint64_t>(decode_bit());
  const auto e = static_cast<std::int64_t>(value - 1);
  return sign ? table.offset + table.size() + e : table.offset - 1 - e;
}

void RangeDecoder::finish() const {
  require(pos_ == data_.size(), ErrorKind::kDecode,
          "range-coded stream has " + std::to_string(data_.size() - pos_) + " trailing bytes");
}

}  // namespace rasc
