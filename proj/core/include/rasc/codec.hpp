#pragma once

#include <cstdint>
#include <vector>

#include "rasc/cdf_tables.hpp"
#include "rasc/container.hpp"
#include "rasc/model.hpp"
#include "rasc/wav.hpp"

namespace rasc {

struct SliceTrace {
  std::vector<std::int64_t> symbols;  // round(y_i - mu_i), row-major [w x T_y]
  std::vector<int> scale_indices;
  Tensor mu;
  Tensor sigma;
  Tensor y_bar;
};

// Intermediate quantities of one encode or decode run.
struct CodecTrace {
  std::vector<std::int64_t> z_symbols;  // row-major [C_z x T_z]
  std::vector<SliceTrace> slices;
  Tensor y_bar;
  std::int64_t latent_frames = 0;
  // Sums of -log2 of the (floored) model probabilities of the coded symbols.
  double estimated_z_bits = 0.0;
  double estimated_y_bits = 0.0;
};

struct CompressResult {
  Container container;
  CodecTrace trace;
};

struct DecompressResult {
  AudioClip audio;
  CodecTrace trace;
};

// Binds a model to its coding tables and checkpoint fingerprint.
class Codec {
 public:
  explicit Codec(const CodecModel& model);

  CompressResult compress(const AudioClip& clip) const;
  // kBitstream when the container does not belong to this model, kDecode
  // when a stream is truncated or corrupt. Never returns partial audio.
  DecompressResult decompress(const Container& container) const;
  // Phi_i from decoded context only, as the decoder derives it.
  GaussianParams slice_params(const std::vector<std::int64_t>& z_symbols, std::int64_t latent_frames,
                              const std::vector<Tensor>& context) const;

  const CodecModel& model() const { return model_; }
  const CodingTables& tables() const { return tables_; }
  const Digest8& fingerprint() const { return fingerprint_; }

 private:
  Tensor z_tensor(const std::vector<std::int64_t>& symbols, std::int64_t frames) const;

  const CodecModel& model_;
  CodingTables tables_;
  Digest8 fingerprint_{};
};

}  // namespace rasc
