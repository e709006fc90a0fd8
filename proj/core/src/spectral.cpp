#include "rasc/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>

#include "rasc/ops.hpp"
#include "rasc/stft.hpp"

namespace rasc {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

// Integral of the triangle (l, 0) -> (c, 1) -> (r, 0) over [a, b].
double triangle_integral(double l, double c, double r, double a, double b) {
  auto segment = [&](double p0, double p1, double v0, double v1) {
    const double lo = std::max(a, p0), hi = std::min(b, p1);
    if (hi <= lo || p1 <= p0) return 0.0;
    auto at = [&](double f) { return v0 + (v1 - v0) * (f - p0) / (p1 - p0); };
    return 0.5 * (at(lo) + at(hi)) * (hi - lo);
  };
  return segment(l, c, 0.0, 1.0) + segment(c, r, 1.0, 0.0);
}

void check_scale(int scale) {
  require(scale >= kMinLossScale && scale <= kMaxLossScale, ErrorKind::kInvalidArgument,
          "loss spectrum scale " + std::to_string(scale) + " outside [5, 11]");
}

}  // namespace

MelFilterbank mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax) {
  require(n_mels >= 1 && n_fft >= 2 && fmax > fmin && fmin >= 0.0, ErrorKind::kInvalidArgument,
          "mel_filterbank: bad parameters");
  const int bins = n_fft / 2 + 1;
  const double df = static_cast<double>(sample_rate) / n_fft;
  const double mlo = hz_to_mel(fmin), mhi = hz_to_mel(fmax);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[i] = mel_to_hz(mlo + (mhi - mlo) * i / (n_mels + 1));
  }
  std::vector<double> w(n_mels * bins, 0.0);
  for (int m = 0; m < n_mels; ++m) {
    for (int k = 0; k < bins; ++k) {
      const double f = k * df;
      w[m * bins + k] =
          triangle_integral(edges[m], edges[m + 1], edges[m + 2], f - df / 2, f + df / 2) / df;
    }
  }
  MelFilterbank fb;
  fb.n_mels = n_mels;
  fb.n_fft = n_fft;
  fb.fmin = fmin;
  fb.fmax = fmax;
  fb.weights = Tensor::from({n_mels, bins}, std::move(w));
  fb.centers_hz.assign(edges.begin() + 1, edges.end() - 1);
  return fb;
}

int loss_window(int scale) { check_scale(scale); return 1 << scale; }
int loss_hop(int scale) { return loss_window(scale) / 4; }
int loss_mels(int scale) { return std::min(64, loss_window(scale) / 2); }

const MelFilterbank& loss_filterbank(int scale) {
  check_scale(scale);
  static std::once_flag once;
  static std::array<MelFilterbank, kMaxLossScale + 1> banks;
  std::call_once(once, [] {
    for (int i = kMinLossScale; i <= kMaxLossScale; ++i) {
      banks[i] = mel_filterbank(loss_mels(i), 1 << i, kSampleRate, 0.0, kSampleRate / 2.0);
    }
  });
  return banks[scale];
}

LossSpectrum log_power_spec(const Tensor& samples, int scale) {
  const int win = loss_window(scale);
  LossSpectrum out;
  out.padded = samples.dim(0) < win;
  out.values = ops::log(ops::add_scalar(stft_power(samples, win, loss_hop(scale)), kLogEpsilon));
  return out;
}

LossSpectrum mel_spec(const Tensor& samples, int scale) {
  const int win = loss_window(scale);
  const auto& fb = loss_filterbank(scale);
  LossSpectrum out;
  out.padded = samples.dim(0) < win;
  Tensor power = stft_power(samples, win, loss_hop(scale));
  out.values = ops::log(ops::add_scalar(ops::matmul(fb.weights, power), kLogEpsilon));
  return out;
}

LossSpectrum log_power_spec(const AudioClip& clip, int scale) {
  return log_power_spec(samples_tensor(clip), scale);
}

LossSpectrum mel_spec(const AudioClip& clip, int scale) {
  return mel_spec(samples_tensor(clip), scale);
}

}  // namespace rasc
