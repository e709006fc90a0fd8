#pragma once

#include <cstdint>
#include <span>

#include "rasc/entropy.hpp"
#include "rasc/model.hpp"
#include "rasc/wav.hpp"

namespace rasc {

// L_t = mean |x - x_hat|; L_f averages, over window sizes 2^5 .. 2^11, the
// mean absolute plus mean squared differences of the log power and log mel
// spectra. Inputs are cropped to the shorter length; a mismatch of more
// than `max_mismatch` samples is rejected.
struct Distortion {
  Tensor time;
  Tensor spectral;
};

Distortion distortion(const Tensor& x, const Tensor& x_hat, std::int64_t max_mismatch = 160);

struct DistortionValues {
  double time = 0.0;
  double spectral = 0.0;
};

DistortionValues distortion(const AudioClip& x, const AudioClip& x_hat,
                            std::int64_t max_mismatch = 160);

// Mean absolute log-mel difference averaged over the loss window sizes.
// Evaluation metric only; same cropping rules as distortion().
double mel_distance(const AudioClip& x, const AudioClip& x_hat, std::int64_t max_mismatch = 160);

// total = rate_y_bits / latent_elements + rate_z_bits / latent_elements
//       + lambda * (l_t + l_f)
struct LossReport {
  double total = 0.0;
  double rate_y_bits = 0.0;
  double rate_z_bits = 0.0;
  double latent_elements = 0.0;
  double l_t = 0.0;
  double l_f = 0.0;
  double lambda = 0.0;
  std::int64_t step = 0;

  double rate_y_per_element() const { return rate_y_bits / latent_elements; }
  double rate_z_per_element() const { return rate_z_bits / latent_elements; }
  double recomputed_total() const;
};

struct RdLoss {
  Tensor total;
  LossReport report;
};

RdLoss rd_loss(const CodecModel& model, std::span<const double> samples, double lambda,
               NoiseSource& noise, QuantMode synthesis = QuantMode::kRound);

}  // namespace rasc
