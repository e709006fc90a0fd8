#include <cmath>
#include <random>

#include <functional>

#include <gtest/gtest.h>

#include "rasc/cdf_tables.hpp"
#include "rasc/digest.hpp"
#include "rasc/range_coder.hpp"
#include "oracles.hpp"

namespace rasc {
namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kInvalidArgument;
}

TEST(CdfTable, FrequenciesSumAndStayPositive) {
  for (double sigma : scale_table().values()) {
    CdfTable t = gaussian_table(sigma);
    EXPECT_EQ(t.cdf.front(), 0u);
    EXPECT_EQ(t.cdf.back(), kProbabilityTotal);
    for (std::int64_t i = 0; i < t.buckets(); ++i) EXPECT_GE(t.frequency(i), 1u);
    EXPECT_TRUE(t.escape);
    EXPECT_NO_THROW(t.validate());
  }
}

TEST(CdfTable, GaussianFrequencyMatchesOracle) {
  CdfTable t = gaussian_table(1.0);
  EXPECT_EQ(t.offset, -6);
  const double expected = testing::simpson_gaussian_mass(0, 1.0) * kProbabilityTotal;
  EXPECT_NEAR(static_cast<double>(t.frequency(0 - t.offset)), expected, 1.0);
  EXPECT_NEAR(static_cast<double>(t.frequency(0 - t.offset)), 25096.0, 1.0);
}

TEST(CdfTable, SupportWidthFollowsScale) {
  EXPECT_EQ(gaussian_table(0.11).size(), 3);   // +-1
  EXPECT_EQ(gaussian_table(2.0).size(), 25);   // +-12
  EXPECT_EQ(gaussian_table(256.0).size(), 129);  // +-64
}

TEST(CdfTable, LargestRemainderRounding) {
  std::vector<double> pmf{0.5, 0.25, 0.125, 0.125};
  CdfTable t = CdfTable::from_pmf(-1, pmf, false);
  EXPECT_EQ(t.frequency(0), 32768u);
  EXPECT_EQ(t.frequency(1), 16384u);
  EXPECT_EQ(t.frequency(3), 8192u);
  std::vector<double> thirds{1.0, 1.0, 1.0};
  CdfTable u = CdfTable::from_pmf(0, thirds, false);
  // 65536 / 3 = 21845.33: one bucket gets the spare unit.
  EXPECT_EQ(u.frequency(0) + u.frequency(1) + u.frequency(2), kProbabilityTotal);
  EXPECT_EQ(u.frequency(0), 21846u);
  std::vector<double> tiny{1.0, 1e-30};
  CdfTable v = CdfTable::from_pmf(0, tiny, true, 0.0);
  EXPECT_EQ(v.frequency(1), 1u);
  EXPECT_EQ(v.frequency(2), 1u);
}

TEST(ScaleTable, NearestNotBelow) {
  const auto& s = scale_table();
  ASSERT_EQ(s.values().size(), 64u);
  EXPECT_NEAR(s.values().front(), 0.11, 1e-12);
  EXPECT_NEAR(s.values().back(), 256.0, 1e-9);
  for (std::size_t i = 1; i < 64; ++i) {
    EXPECT_NEAR(std::log(s.values()[i] / s.values()[i - 1]), std::log(256.0 / 0.11) / 63, 1e-12);
  }
  EXPECT_EQ(s.index(0.05), 0);
  EXPECT_EQ(s.index(0.11), 0);
  EXPECT_EQ(s.index(1000.0), 63);
  for (double sigma : {0.2, 1.0, 3.7, 100.0}) {
    const int i = s.index(sigma);
    EXPECT_GE(s.values()[i], sigma);
    EXPECT_LT(s.values()[i - 1], sigma);
  }
}

TEST(RangeCoder, EmptyStreamIsShort) {
  RangeEncoder enc;
  auto bytes = enc.finish();
  EXPECT_LE(bytes.size(), 8u);
  RangeDecoder dec(bytes);
  EXPECT_NO_THROW(dec.finish());
}

TEST(RangeCoder, RandomRoundTrips) {
  std::mt19937_64 rng(1);
  const auto& scales = scale_table().values();
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 200);
    std::vector<int> which(n);
    std::vector<std::int64_t> symbols(n);
    std::vector<int> bits_sent(n);
    RangeEncoder enc;
    for (int i = 0; i < n; ++i) {
      which[i] = static_cast<int>(rng() % scales.size());
      std::normal_distribution<double> d(0.0, scales[which[i]] * 1.5);
      symbols[i] = std::llround(d(rng));
      bits_sent[i] = static_cast<int>(rng() & 1);
      enc.encode_symbol(gaussian_table(scales[which[i]]), symbols[i]);
      enc.encode_bit(bits_sent[i]);
    }
    auto bytes = enc.finish();
    RangeDecoder dec(bytes);
    for (int i = 0; i < n; ++i) {
      ASSERT_EQ(dec.decode_symbol(gaussian_table(scales[which[i]])), symbols[i]) << trial;
      ASSERT_EQ(dec.decode_bit(), bits_sent[i]);
    }
    EXPECT_NO_THROW(dec.finish());
  }
}

TEST(RangeCoder, LengthCloseToIdeal) {
  CdfTable t = gaussian_table(3.0);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> d(0.0, 3.0);
  const int n = 100000;
  std::vector<std::int64_t> symbols(n);
  double ideal = 0.0;
  RangeEncoder enc;
  for (auto& s : symbols) {
    s = std::llround(d(rng));
    ideal -= std::log2(t.probability(s));
    enc.encode_symbol(t, s);
  }
  auto bytes = enc.finish();
  EXPECT_LE(8.0 * bytes.size(), ideal * 1.001 + 64);
  RangeDecoder dec(bytes);
  for (auto s : symbols) ASSERT_EQ(dec.decode_symbol(t), s);
  dec.finish();
}

TEST(RangeCoder, EscapedSymbolsRoundTrip) {
  CdfTable t = gaussian_table(0.5);
  const std::vector<std::int64_t> symbols{0, 4, -4, 1000, -123456, 1LL << 40, 3, -(1LL << 33)};
  RangeEncoder enc;
  for (auto s : symbols) enc.encode_symbol(t, s);
  auto bytes = enc.finish();
  RangeDecoder dec(bytes);
  for (auto s : symbols) EXPECT_EQ(dec.decode_symbol(t), s);
  dec.finish();
  EXPECT_EQ(escape_tail_bits(t, 4), 2);       // sign, then value 0 in one bit
  EXPECT_EQ(escape_tail_bits(t, 6), 4);       // value 2: "011"
  EXPECT_NEAR(t.probability(4), t.frequency(t.size()) / 65536.0 / 4.0, 1e-15);
}

TEST(RangeCoder, OutOfAlphabetWithoutEscapeThrows) {
  std::vector<double> pmf{0.25, 0.5, 0.25};
  CdfTable t = CdfTable::from_pmf(-1, pmf, false);
  RangeEncoder enc;
  EXPECT_EQ(kind_of([&] { enc.encode_symbol(t, 2); }), ErrorKind::kInvalidArgument);
}

TEST(RangeCoder, TruncatedAndTrailingBytesAreDetected) {
  CdfTable t = gaussian_table(4.0);
  std::mt19937_64 rng(3);
  std::vector<std::int64_t> symbols(500);
  RangeEncoder enc;
  for (auto& s : symbols) {
    s = static_cast<std::int64_t>(rng() % 17) - 8;
    enc.encode_symbol(t, s);
  }
  auto bytes = enc.finish();
  auto decode_all = [&](std::vector<std::uint8_t> b) {
    RangeDecoder dec(b);
    for (std::size_t i = 0; i < symbols.size(); ++i) dec.decode_symbol(t);
    dec.finish();
  };
  decode_all(bytes);
  auto shorter = bytes;
  shorter.pop_back();
  EXPECT_EQ(kind_of([&] { decode_all(shorter); }), ErrorKind::kDecode);
  auto longer = bytes;
  longer.push_back(0);
  EXPECT_EQ(kind_of([&] { decode_all(longer); }), ErrorKind::kDecode);
  EXPECT_EQ(kind_of([&] { decode_all({}); }), ErrorKind::kDecode);
}

TEST(CdfTable, GaussianTablesAreReproducible) {
  std::vector<std::uint8_t> blob;
  for (double sigma : scale_table().values()) {
    CdfTable t = gaussian_table(sigma);
    for (auto f : t.cdf) {
      for (int b = 0; b < 4; ++b) blob.push_back(static_cast<std::uint8_t>(f >> (8 * b)));
    }
  }
  EXPECT_EQ(hex(digest8(blob)), "6968aedddac5caaf");
}

}  // namespace
}  // namespace rasc
