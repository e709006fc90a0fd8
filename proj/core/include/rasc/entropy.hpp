#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rasc/backbone.hpp"
#include "rasc/layers.hpp"
#include "rasc/rwkv.hpp"

namespace rasc {

inline constexpr double kSigmaMin = 0.11;
inline constexpr double kLikelihoodFloor = 1.0 / 65536.0;

enum class QuantMode { kNoise, kRound };

// Deterministic source of U(-1/2, 1/2) noise tensors.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) : rng_(seed) {}
  Tensor uniform(const Shape& shape, Precision precision);

 private:
  std::mt19937_64 rng_;
};

// kRound: round(v - mu) + mu with a straight-through gradient.
// kNoise: v + U(-1/2, 1/2); mu is ignored.
Tensor quantize(const Tensor& v, const Tensor& mu, QuantMode mode, NoiseSource* noise);

// Integer symbols round(v - mu), half away from zero.
std::vector<std::int64_t> coding_symbols(const Tensor& v, const Tensor& mu);

// P(n) for a zero-mean Gaussian of scale sigma integrated over [n - 1/2, n + 1/2].
// `raw` skips the 2^-16 floor. sigma below kSigmaMin is clamped.
double gaussian_pmf(std::int64_t n, double mu_frac, double sigma, bool raw = false);
std::int64_t sigma_clamp_count();

// Differentiable Gaussian likelihood of (v - mu) under N(0, sigma^2), floored.
Tensor gaussian_likelihood(const Tensor& v, const Tensor& mu, const Tensor& sigma);

// Per-channel monotone CDF network with layer sizes [1, 3, 3, 3, 1].
class FactorizedDensity {
 public:
  FactorizedDensity() = default;
  FactorizedDensity(ParamStore& store, const std::string& name, std::int64_t channels,
                    double init_scale = 4.0);

  std::int64_t channels() const { return channels_; }

  // Logit of the CDF, x [C x N] -> [C x N].
  Tensor logits(const Tensor& x) const;
  Tensor cdf(const Tensor& x) const;
  // P(x - 1/2 < Z <= x + 1/2), floored at 2^-16 unless raw.
  Tensor likelihood(const Tensor& x, bool raw = false) const;
  double cdf_at(std::int64_t channel, double x) const;
  // CDF(x) = 1/2 per channel, by bisection.
  std::vector<double> medians() const;

  static constexpr std::int64_t kWidth = 3;
  static constexpr int kLayers = 4;

  // matrices[k]: [C x out*in]; biases[k]: [C x out]; factors[k]: [C x out].
  std::vector<Tensor> matrices, biases, factors;

 private:
  std::int64_t channels_ = 0;
};

// z = h_a(y): conv K3, CRM, ELU, strided conv by 2.
class HyperAnalysis {
 public:
  HyperAnalysis() = default;
  HyperAnalysis(ParamStore& store, const std::string& name, std::int64_t latent,
                std::int64_t hyper, const CrmConfig& crm);
  Tensor operator()(const Tensor& y) const;

  Conv1d input;
  CrmBlock crm;
  Conv1d down;
};

struct HyperFeatures {
  Tensor mean;
  Tensor scale;
};

// (F_mean, F_scale) = h_s(z_hat), cropped to `frames`.
class HyperSynthesis {
 public:
  HyperSynthesis() = default;
  HyperSynthesis(ParamStore& store, const std::string& name, std::int64_t latent,
                 std::int64_t hyper, const CrmConfig& crm);
  HyperFeatures operator()(const Tensor& z_hat, std::int64_t frames) const;

  ConvTranspose1d up;
  CrmBlock crm;
  Conv1d output;
  std::int64_t latent = 0;
};

struct GaussianParams {
  Tensor mu;
  Tensor sigma;
};

// Parameter and residual networks of one slice.
class SliceNet {
 public:
  SliceNet() = default;
  SliceNet(ParamStore& store, const std::string& name, std::int64_t index, std::int64_t latent,
           std::int64_t width, std::int64_t hidden, const RwkvConfig& rwkv);

  GaussianParams params(const HyperFeatures& features, const std::vector<Tensor>& context) const;
  Tensor residual(const HyperFeatures& features, const std::vector<Tensor>& context,
                  const Tensor& y_hat) const;

  std::int64_t index = 0;
  std::int64_t width = 0;
  Conv1d param_in;
  RwkvBlock param_rwkv;
  Conv1d param_mid, param_out;
  Conv1d lrp_in, lrp_out;
};

struct SliceResult {
  GaussianParams phi;
  Tensor y_hat;     // quantized slice fed to synthesis
  Tensor residual;  // r_i, |r_i| < 1/2
  Tensor y_bar;     // y_hat + r_i
  Tensor y_tilde;   // noisy slice for the rate term (training only)
};

struct EntropyConfig {
  std::int64_t latent = 32;
  std::int64_t hyper = 16;
  std::int64_t slices = 4;
  std::int64_t slice_hidden = 32;
  CrmConfig hyper_crm;
  RwkvConfig rwkv;

  std::int64_t slice_width() const { return latent / slices; }
  void validate() const;
};

class EntropyModel {
 public:
  EntropyModel() = default;
  EntropyModel(ParamStore& store, const std::string& name, const EntropyConfig& config);

  // Processes slice i given the already refined slices 0..i-1 in `context`.
  // With y_i undefined only Phi_i is produced.
  SliceResult slice_step(std::int64_t i, const Tensor& y_i, const std::vector<Tensor>& context,
                         const HyperFeatures& features, QuantMode mode,
                         NoiseSource* noise) const;

  EntropyConfig config;
  HyperAnalysis h_a;
  HyperSynthesis h_s;
  FactorizedDensity density;
  std::vector<SliceNet> slices;
};

struct EntropyDiagnostics {
  std::vector<double> slice_bits;
  double z_bits = 0.0;
};

struct EntropyOutput {
  Tensor y_bar;   // [C x T_y]
  Tensor rate_y;  // bits, scalar
  Tensor rate_z;  // bits, scalar
  EntropyDiagnostics diagnostics;
};

// Training-mode pass: noise for the rate terms, `synthesis` quantization for
// the path into h_s and g_s.
EntropyOutput entropy_forward_train(const EntropyModel& model, const Tensor& y,
                                    NoiseSource& noise, QuantMode synthesis = QuantMode::kRound);

// -log2 of the product of the likelihoods.
Tensor bits(const Tensor& likelihood);

}  // namespace rasc
