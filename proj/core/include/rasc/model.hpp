#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "rasc/backbone.hpp"
#include "rasc/checkpoint.hpp"
#include "rasc/container.hpp"
#include "rasc/entropy.hpp"
#include "rasc/stft.hpp"

namespace rasc {

struct ModelConfig {
  StftConfig stft;
  BackboneConfig backbone;
  EntropyConfig entropy;
  // Spectrogram multiplier at the encoder input; the decoder output is
  // divided by it.
  double input_scale = 0.1;
  Precision precision = Precision::kF32;
  std::uint64_t seed = 1;

  // 16 kHz, 512/160 STFT, widths [64, 128, 192], strides [2, 2, 1], C = 32.
  static ModelConfig desk();
  // Tiny variant for gradient checks: n_fft 32, hop 8, C = 8, two slices.
  static ModelConfig toy();

  std::int64_t latent_frames(std::int64_t frames) const;
  std::int64_t hyper_frames(std::int64_t frames) const;
  void validate() const;

  // Flat numeric description used for checkpoints and hashing.
  std::map<std::string, double> to_map() const;
  static ModelConfig from_map(const std::map<std::string, double>& values);
};

Digest8 config_hash(const ModelConfig& config);

struct TrainForward {
  Tensor x_hat;  // reconstructed samples [N]
  EntropyOutput entropy;
  std::int64_t frames = 0;
};

class CodecModel {
 public:
  explicit CodecModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

  // Scaled [2F x T] encoder input for raw samples.
  Tensor analysis_input(std::span<const double> samples) const;
  Tensor analysis_input(const AudioClip& clip) const;
  // g_s, crop to `frames`, undo the input scale, inverse STFT to `length` samples.
  Tensor synthesize(const Tensor& y_bar, std::int64_t frames, std::int64_t length) const;

  TrainForward forward_train(std::span<const double> samples, NoiseSource& noise,
                             QuantMode synthesis = QuantMode::kRound) const;

  Encoder encoder;
  Decoder decoder;
  EntropyModel entropy;
  // Rate-distortion trade-off the parameters were trained for, if known.
  std::optional<double> lambda;

 private:
  ModelConfig config_;
  ParamStore store_;
};

Checkpoint to_checkpoint(const CodecModel& model);
CodecModel from_checkpoint(const Checkpoint& checkpoint);
void save_model(const std::string& path, const CodecModel& model);
CodecModel load_model(const std::string& path);

// Position of `lambda` in the standard grid, or kCustomLambda.
std::uint8_t lambda_index(std::optional<double> lambda);
const std::vector<double>& lambda_grid();

// First eight bytes of the SHA-256 of the serialized checkpoint.
Digest8 model_fingerprint(const CodecModel& model);

}  // namespace rasc
