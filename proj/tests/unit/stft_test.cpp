#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "rasc/gradcheck.hpp"
#include "rasc/ops.hpp"
#include "rasc/stft.hpp"
#include "signals.hpp"

namespace rasc {
namespace {

double relative_l2(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += a[i] * a[i];
  }
  return std::sqrt(num / den);
}

TEST(Stft, FrameCountUsesCentrePadding) {
  StftConfig c;
  EXPECT_EQ(c.frames(16000), 101);
  EXPECT_EQ(c.frames(15999), 100);
  EXPECT_EQ(c.frames(1), 1);
  Spectrogram s = stft(std::vector<double>(16000, 0.0), c);
  EXPECT_EQ(s.data.shape(), (Shape{514, 101}));
}

TEST(Stft, RejectsVanishingOverlapAdd) {
  StftConfig c;
  c.hop = 512;  // periodic Hann is zero at n = 0, so the envelope vanishes there
  EXPECT_THROW(c.validate(), Error);
  c.hop = 600;
  EXPECT_THROW(c.validate(), Error);
  c.hop = 160;
  EXPECT_NO_THROW(c.validate());
  const auto [lo, hi] = window_envelope_range(c);
  EXPECT_GT(lo, 0.0);
  EXPECT_GE(hi, lo);
}

TEST(Stft, BinCentredSineConcentratesEnergy) {
  const int bin = 40;
  const double hz = bin * 16000.0 / 512;
  std::vector<double> x(8000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * std::numbers::pi * hz * i / 16000.0);
  Spectrogram s = stft(x);
  const std::int64_t frames = s.frames, bins = 257;
  for (std::int64_t t = 3; t < frames - 3; ++t) {
    double best = 0.0, total = 0.0;
    std::int64_t arg = -1;
    for (std::int64_t k = 0; k < bins; ++k) {
      const double p = std::pow(s.data(k, t), 2) + std::pow(s.data(bins + k, t), 2);
      total += p;
      if (p > best) {
        best = p;
        arg = k;
      }
    }
    EXPECT_EQ(arg, bin);
    // Hann main lobe: the peak bin holds 2/3 of the energy with its two neighbours.
    EXPECT_GT(best / total, 0.6);
  }
}

TEST(Stft, ZeroClipGivesZeroSpectrogram) {
  Spectrogram s = stft(std::vector<double>(3000, 0.0));
  for (double v : s.data.values()) EXPECT_EQ(v, 0.0);
}

TEST(Stft, RoundTripOnRandomSignals) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::int64_t n = 4 * 512 + static_cast<std::int64_t>(seed) * 337;
    auto x = testing::random_signal(n, seed, 0.3);
    Spectrogram s = stft(x);
    Tensor y = istft(s.data, s.config, n);
    EXPECT_LT(relative_l2(x, y.values()), 1e-6) << "seed " << seed;
  }
}

TEST(Stft, RoundTripOnShortAndOddConfigs) {
  StftConfig c;
  c.n_fft = 32;
  c.hop = 8;
  for (std::int64_t n : {1, 7, 31, 120, 1001}) {
    auto x = testing::random_signal(n, static_cast<std::uint64_t>(n), 1.0);
    Spectrogram s = stft(x, c);
    EXPECT_LT(relative_l2(x, istft(s.data, c, n).values()), 1e-9) << n;
  }
}

TEST(Stft, IstftGradient) {
  StftConfig c;
  c.n_fft = 16;
  c.hop = 4;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d;
  std::vector<double> v(18 * 6);
  for (auto& x : v) x = d(rng);
  Tensor spec = Tensor::parameter("spec", {18, 6}, v, Precision::kF64);
  Tensor w = Tensor::from({20}, testing::random_signal(20, 8));
  std::vector<Tensor> ps{spec};
  GradCheckOptions o;
  o.coords_per_parameter = 108;
  auto r = finite_difference_check([&] { return ops::sum(ops::mul(istft(spec, c, 20), w)); }, ps, o);
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(Stft, PowerGradient) {
  Tensor x = Tensor::parameter("x", {40}, testing::random_signal(40, 3), Precision::kF64);
  Tensor short_x = Tensor::parameter("s", {5}, testing::random_signal(5, 4), Precision::kF64);
  std::vector<Tensor> ps{x, short_x};
  GradCheckOptions o;
  o.coords_per_parameter = 40;
  auto loss = [&] {
    return ops::add(ops::sum(ops::log(ops::add_scalar(stft_power(x, 16, 4), 1e-3))),
                    ops::sum(stft_power(short_x, 8, 2)));
  };
  EXPECT_LT(finite_difference_check(loss, ps, o).max_relative_error, 1e-4);
}

TEST(Stft, ShortSignalGivesOnePaddedFrame) {
  Tensor p = stft_power(Tensor::from({5}, {1, 0, 0, 0, 0}), 8, 2);
  EXPECT_EQ(p.shape(), (Shape{5, 1}));
}

}  // namespace
}  // namespace rasc
