#pragma once

#include <cstdint>
#include <vector>

#include "rasc/tensor.hpp"
#include "rasc/wav.hpp"

namespace rasc {

// Periodic Hann window analysis. With `center` the signal is reflection
// padded by n_fft/2 on both sides so frame t is centred on sample t*hop.
struct StftConfig {
  int n_fft = 512;
  int hop = 160;
  bool center = true;

  int bins() const { return n_fft / 2 + 1; }
  std::int64_t padding() const { return center ? n_fft / 2 : 0; }
  std::int64_t frames(std::int64_t length) const;

  // Rejects pairs whose squared-window overlap-add envelope vanishes
  // anywhere, so weighted overlap-add can invert the transform.
  void validate() const;
};

std::vector<double> hann_window(int n);

// Min / max of the steady-state envelope sum_k w^2(n - k*hop).
std::pair<double, double> window_envelope_range(const StftConfig& config);

// Complex STFT stacked as [2F x T]: rows 0..F-1 real, F..2F-1 imaginary.
struct Spectrogram {
  StftConfig config;
  std::int64_t frames = 0;
  std::int64_t length = 0;  // samples in the analysed signal
  Tensor data;
};

Spectrogram stft(const AudioClip& clip, const StftConfig& config = {});
Spectrogram stft(std::span<const double> samples, const StftConfig& config = {});
AudioClip istft(const Spectrogram& spec);

// Differentiable inverse: [2F x T] -> [length] by weighted overlap-add.
Tensor istft(const Tensor& spec, const StftConfig& config, std::int64_t length);

// Differentiable uncentred power spectrogram |STFT|^2 of samples [N] ->
// [F x T]. Signals shorter than one window produce a single zero-padded frame.
Tensor stft_power(const Tensor& samples, int n_fft, int hop);

Tensor samples_tensor(const AudioClip& clip, Precision precision = Precision::kF64);

}  // namespace rasc
