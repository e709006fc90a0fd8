#pragma once

#include <vector>

#include "rasc/tensor.hpp"
#include "rasc/wav.hpp"

namespace rasc {

inline constexpr double kLogEpsilon = 1e-5;
inline constexpr int kMinLossScale = 5;
inline constexpr int kMaxLossScale = 11;

// Triangular mel filters. Each weight is the triangle's mean value over the
// FFT bin's frequency interval, so narrow filters never come out empty and
// every bin inside [fmin, fmax] gets positive weight from some filter.
struct MelFilterbank {
  int n_mels = 0;
  int n_fft = 0;
  double fmin = 0.0;
  double fmax = 0.0;
  Tensor weights;  // [n_mels x F]
  std::vector<double> centers_hz;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

MelFilterbank mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax);

// Log spectra at window 2^i, shift 2^i / 4, Hann, uncentred.
struct LossSpectrum {
  Tensor values;  // [bins or mels x frames]
  bool padded = false;  // input shorter than one window
};

int loss_window(int scale);
int loss_hop(int scale);
int loss_mels(int scale);
const MelFilterbank& loss_filterbank(int scale);

LossSpectrum log_power_spec(const Tensor& samples, int scale);
LossSpectrum mel_spec(const Tensor& samples, int scale);
LossSpectrum log_power_spec(const AudioClip& clip, int scale);
LossSpectrum mel_spec(const AudioClip& clip, int scale);

}  // namespace rasc
