#include "rasc/stft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>

#include "rasc/fft.hpp"

namespace rasc {

namespace {

constexpr double kEnvelopeFloor = 1e-5;

// Reflection without edge repeat, bouncing as often as needed.
std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  }
  return w;
}

std::int64_t StftConfig::frames(std::int64_t length) const {
  const std::int64_t padded = length + 2 * padding();
  if (padded < n_fft) return 1;
  return 1 + (padded - n_fft) / hop;
}

std::pair<double, double> window_envelope_range(const StftConfig& config) {
  const auto w = hann_window(config.n_fft);
  double lo = INFINITY, hi = 0.0;
  for (int n = 0; n < config.hop; ++n) {
    double acc = 0.0;
    for (int m = n; m < config.n_fft; m += config.hop) acc += w[m] * w[m];
    lo = std::min(lo, acc);
    hi = std::max(hi, acc);
  }
  return {lo, hi};
}

void StftConfig::validate() const {
  require(n_fft >= 4 && n_fft % 2 == 0, ErrorKind::kInvalidArgument,
          "stft: n_fft must be even and >= 4, got " + std::to_string(n_fft));
  require(hop >= 1 && hop <= n_fft, ErrorKind::kInvalidArgument,
          "stft: hop " + std::to_string(hop) + " must lie in [1, n_fft]");
  const auto [lo, hi] = window_envelope_range(*this);
  require(lo > 1e-3 * hi, ErrorKind::kInvalidArgument,
          "stft: window/hop pair (" + std::to_string(n_fft) + ", " + std::to_string(hop) +
              ") has a vanishing overlap-add envelope");
}

Spectrogram stft(std::span<const double> samples, const StftConfig& config) {
  config.validate();
  const std::int64_t n = static_cast<std::int64_t>(samples.size());
  require(n >= 1, ErrorKind::kInvalidArgument, "stft: empty signal");
  const int nfft = config.n_fft;
  const int bins = config.bins();
  const std::int64_t frames = config.frames(n);
  const std::int64_t pad = config.padding();
  const auto window = hann_window(nfft);
  std::vector<double> out(2 * bins * frames);
  std::vector<double> frame(nfft);
  std::vector<std::complex<double>> spec(bins);
  for (std::int64_t t = 0; t < frames; ++t) {
    for (int m = 0; m < nfft; ++m) {
      const std::int64_t p = t * config.hop + m - pad;
      double v;
      if (config.center) {
        v = samples[reflect_index(p, n)];
      } else {
        v = (p >= 0 && p < n) ? samples[p] : 0.0;
      }
      frame[m] = v * window[m];
    }
    fft::rfft(frame, spec);
    for (int k = 0; k < bins; ++k) {
      out[k * frames + t] = spec[k].real();
      out[(bins + k) * frames + t] = spec[k].imag();
    }
  }
  Spectrogram s;
  s.config = config;
  s.frames = frames;
  s.length = n;
  s.data = Tensor::from({2 * bins, frames}, std::move(out));
  return s;
}

Spectrogram stft(const AudioClip& clip, const StftConfig& config) {
  std::vector<double> x(clip.samples.begin(), clip.samples.end());
  return stft(x, config);
}

Tensor istft(const Tensor& spec, const StftConfig& config, std::int64_t length) {
  config.validate();
  const int nfft = config.n_fft;
  const int bins = config.bins();
  require(spec.rank() == 2 && spec.dim(0) == 2 * bins, ErrorKind::kShape,
          "istft: expected [" + std::to_string(2 * bins) + " x T], got " +
              shape_str(spec.shape()));
  require(length >= 1, ErrorKind::kInvalidArgument, "istft: length must be >= 1");
  const std::int64_t frames = spec.dim(1);
  const std::int64_t hop = config.hop;
  const std::int64_t pad = config.padding();
  const std::int64_t span = (frames - 1) * hop + nfft;
  auto window = std::make_shared<std::vector<double>>(hann_window(nfft));
  auto envelope = std::make_shared<std::vector<double>>(span, 0.0);
  std::vector<double> ola(span, 0.0);
  auto x = spec.values();
  std::vector<std::complex<double>> buf(bins);
  std::vector<double> frame(nfft);
  for (std::int64_t t = 0; t < frames; ++t) {
    for (int k = 0; k < bins; ++k) {
      buf[k] = {x[k * frames + t], x[(bins + k) * frames + t]};
    }
    fft::irfft_unnormalized(buf, frame);
    for (int m = 0; m < nfft; ++m) {
      const double w = (*window)[m];
      ola[t * hop + m] += frame[m] / nfft * w;
      (*envelope)[t * hop + m] += w * w;
    }
  }
  std::vector<double> out(length, 0.0);
  for (std::int64_t i = 0; i < length; ++i) {
    const std::int64_t p = i + pad;
    if (p < span) out[i] = ola[p] / std::max((*envelope)[p], kEnvelopeFloor);
  }
  return make_result(
      "istft", {length}, std::move(out), {spec},
      [=](const BackwardContext& ctx) {
        double* gx = ctx.input_grad(0);
        if (!gx) return;
        auto g = ctx.grad();
        std::vector<double> gp(span, 0.0);
        for (std::int64_t i = 0; i < length; ++i) {
          const std::int64_t p = i + pad;
          if (p < span) gp[p] = g[i] / std::max((*envelope)[p], kEnvelopeFloor);
        }
        std::vector<double> seg(nfft);
        std::vector<std::complex<double>> c(bins);
        for (std::int64_t t = 0; t < frames; ++t) {
          for (int m = 0; m < nfft; ++m) seg[m] = (*window)[m] * gp[t * hop + m];
          fft::rfft(seg, c);
          for (int k = 0; k < bins; ++k) {
            const bool edge = (k == 0 || k == nfft / 2);
            const double ck = (edge ? 1.0 : 2.0) / nfft;
            gx[k * frames + t] += ck * c[k].real();
            if (!edge) gx[(bins + k) * frames + t] += ck * c[k].imag();
          }
        }
      });
}

AudioClip istft(const Spectrogram& spec) {
  NoGradGuard guard;
  Tensor y = istft(spec.data, spec.config, spec.length);
  AudioClip clip;
  clip.samples.reserve(y.numel());
  for (double v : y.values()) clip.samples.push_back(static_cast<float>(v));
  return clip;
}

Tensor stft_power(const Tensor& samples, int n_fft, int hop) {
  require(samples.rank() == 1, ErrorKind::kShape,
          "stft_power: expected samples [N], got " + shape_str(samples.shape()));
  require(n_fft >= 2 && hop >= 1, ErrorKind::kInvalidArgument, "stft_power: bad window");
  const std::int64_t n = samples.dim(0);
  const int bins = n_fft / 2 + 1;
  const std::int64_t frames = n < n_fft ? 1 : 1 + (n - n_fft) / hop;
  auto window = std::make_shared<std::vector<double>>(hann_window(n_fft));
  auto spectra = std::make_shared<std::vector<std::complex<double>>>(bins * frames);
  auto x = samples.values();
  std::vector<double> frame(n_fft);
  std::vector<double> out(bins * frames);
  for (std::int64_t t = 0; t < frames; ++t) {
    for (int m = 0; m < n_fft; ++m) {
      const std::int64_t p = t * hop + m;
      frame[m] = p < n ? x[p] * (*window)[m] : 0.0;
    }
    std::span<std::complex<double>> spec(spectra->data() + t * bins, bins);
    fft::rfft(frame, spec);
    for (int k = 0; k < bins; ++k) out[k * frames + t] = std::norm(spec[k]);
  }
  return make_result(
      "stft_power", {bins, frames}, std::move(out), {samples},
      [=](const BackwardContext& ctx) {
        double* gx = ctx.input_grad(0);
        if (!gx) return;
        auto g = ctx.grad();
        std::vector<std::complex<double>> y(bins);
        std::vector<double> back(n_fft);
        for (std::int64_t t = 0; t < frames; ++t) {
          for (int k = 0; k < bins; ++k) {
            const std::complex<double> a = 2.0 * g[k * frames + t] * (*spectra)[t * bins + k];
            const bool edge = (k == 0 || (n_fft % 2 == 0 && k == n_fft / 2));
            y[k] = edge ? a : 0.5 * a;
          }
          fft::irfft_unnormalized(y, back);
          for (int m = 0; m < n_fft; ++m) {
            const std::int64_t p = t * hop + m;
            if (p < n) gx[p] += (*window)[m] * back[m];
          }
        }
      });
}

Tensor samples_tensor(const AudioClip& clip, Precision precision) {
  require(!clip.samples.empty(), ErrorKind::kInvalidArgument, "empty audio clip");
  std::vector<double> x(clip.samples.begin(), clip.samples.end());
  const auto n = static_cast<std::int64_t>(x.size());
  return Tensor::from({n}, std::move(x), precision);
}

}  // namespace rasc
