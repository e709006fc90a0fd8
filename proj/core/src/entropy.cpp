#include "rasc/entropy.hpp"

#include <atomic>
#include <cmath>
#include <numbers>

#include "rasc/ops.hpp"

namespace rasc {

namespace {

std::atomic<std::int64_t> g_sigma_clamps{0};

double phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Column j of [C x n] as a [C] vector.
Tensor column(const Tensor& m, std::int64_t j) {
  return ops::reshape(ops::slice_cols(m, j, 1), {m.dim(0)});
}

std::vector<Tensor> with_front(std::vector<Tensor> head, const std::vector<Tensor>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

constexpr std::int64_t kFilters[] = {1, 3, 3, 3, 1};

}  // namespace

Tensor NoiseSource::uniform(const Shape& shape, Precision precision) {
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = dist(rng_);
  return Tensor::from(shape, std::move(v), precision);
}

Tensor quantize(const Tensor& v, const Tensor& mu, QuantMode mode, NoiseSource* noise) {
  if (mode == QuantMode::kNoise) {
    require(noise != nullptr, ErrorKind::kInvalidArgument, "noise quantization needs a noise source");
    return ops::add(v, noise->uniform(v.shape(), v.precision()));
  }
  require(v.shape() == mu.shape(), ErrorKind::kShape,
          "quantize: " + shape_str(v.shape()) + " vs mean " + shape_str(mu.shape()));
  return ops::add(ops::round_ste(ops::sub(v, mu)), mu);
}

std::vector<std::int64_t> coding_symbols(const Tensor& v, const Tensor& mu) {
  require(v.shape() == mu.shape(), ErrorKind::kShape, "coding_symbols shape mismatch");
  NoGradGuard guard;
  Tensor d = ops::sub(v, mu);
  std::vector<std::int64_t> out(d.numel());
  auto dv = d.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::int64_t>(ops::round_half_away(dv[i]));
  }
  return out;
}

double gaussian_pmf(std::int64_t n, double mu_frac, double sigma, bool raw) {
  if (!(sigma >= kSigmaMin)) {
    g_sigma_clamps.fetch_add(1, std::memory_order_relaxed);
    sigma = kSigmaMin;
  }
  // Integrate on the lower tail side for accuracy.
  const double a = std::abs(static_cast<double>(n) - mu_frac);
  const double p = phi((0.5 - a) / sigma) - phi((-0.5 - a) / sigma);
  return raw ? p : std::max(p, kLikelihoodFloor);
}

std::int64_t sigma_clamp_count() { return g_sigma_clamps.load(); }

Tensor gaussian_likelihood(const Tensor& v, const Tensor& mu, const Tensor& sigma) {
  Tensor neg = ops::scale(ops::abs(ops::sub(v, mu)), -1.0);
  Tensor upper = ops::normal_cdf(ops::div(ops::add_scalar(neg, 0.5), sigma));
  Tensor lower = ops::normal_cdf(ops::div(ops::add_scalar(neg, -0.5), sigma));
  return ops::lower_bound(ops::sub(upper, lower), kLikelihoodFloor);
}

Tensor bits(const Tensor& likelihood) {
  return ops::scale(ops::sum(ops::log(likelihood)), -1.0 / std::numbers::ln2);
}

FactorizedDensity::FactorizedDensity(ParamStore& store, const std::string& name,
                                     std::int64_t channels, double init_scale)
    : channels_(channels) {
  const double s = std::pow(init_scale, 1.0 / kLayers);
  for (int k = 0; k < kLayers; ++k) {
    const std::int64_t in = kFilters[k], out = kFilters[k + 1];
    const double m = std::log(std::expm1(1.0 / s / static_cast<double>(out)));
    const std::string layer = name + ".layer" + std::to_string(k);
    matrices.push_back(store.constant(layer + ".matrix", {channels, out * in}, m));
    biases.push_back(store.constant(layer + ".bias", {channels, out}, 0.0));
    if (k + 1 < kLayers) factors.push_back(store.constant(layer + ".factor", {channels, out}, 0.0));
  }
}

Tensor FactorizedDensity::logits(const Tensor& x) const {
  require(x.rank() == 2 && x.dim(0) == channels_, ErrorKind::kShape,
          "factorized density expects " + std::to_string(channels_) + " channels, got " +
              shape_str(x.shape()));
  std::vector<Tensor> h{x};
  for (int k = 0; k < kLayers; ++k) {
    const std::int64_t in = kFilters[k], out = kFilters[k + 1];
    Tensor weights = ops::softplus(matrices[k]);
    Tensor gates = k + 1 < kLayers ? ops::tanh(factors[k]) : Tensor();
    std::vector<Tensor> next;
    for (std::int64_t j = 0; j < out; ++j) {
      Tensor acc = ops::mul_channel(h[0], column(weights, j * in));
      for (std::int64_t i = 1; i < in; ++i) {
        acc = ops::add(acc, ops::mul_channel(h[i], column(weights, j * in + i)));
      }
      acc = ops::add_bias(acc, column(biases[k], j));
      if (k + 1 < kLayers) acc = ops::add(acc, ops::mul_channel(ops::tanh(acc), column(gates, j)));
      next.push_back(acc);
    }
    h = std::move(next);
  }
  return h[0];
}

Tensor FactorizedDensity::cdf(const Tensor& x) const { return ops::sigmoid(logits(x)); }

Tensor FactorizedDensity::likelihood(const Tensor& x, bool raw) const {
  Tensor lower = logits(ops::add_scalar(x, -0.5));
  Tensor upper = logits(ops::add_scalar(x, 0.5));
  // Evaluate on the side where the sigmoids are far from saturation.
  std::vector<double> sign(x.numel());
  auto lv = lower.values(), uv = upper.values();
  for (std::size_t i = 0; i < sign.size(); ++i) sign[i] = lv[i] + uv[i] > 0 ? -1.0 : 1.0;
  Tensor s = Tensor::from(x.shape(), std::move(sign), x.precision());
  Tensor p = ops::abs(ops::sub(ops::sigmoid(ops::mul(s, upper)), ops::sigmoid(ops::mul(s, lower))));
  return raw ? p : ops::lower_bound(p, kLikelihoodFloor);
}

double FactorizedDensity::cdf_at(std::int64_t channel, double x) const {
  NoGradGuard guard;
  Tensor t = Tensor::full({channels_, 1}, x, matrices[0].precision());
  return cdf(t).values()[channel];
}

std::vector<double> FactorizedDensity::medians() const {
  NoGradGuard guard;
  std::vector<double> lo(channels_, -1e4), hi(channels_, 1e4);
  for (int it = 0; it < 60; ++it) {
    std::vector<double> mid(channels_);
    for (std::int64_t c = 0; c < channels_; ++c) mid[c] = 0.5 * (lo[c] + hi[c]);
    Tensor l = logits(Tensor::from({channels_, 1}, mid, Precision::kF64));
    for (std::int64_t c = 0; c < channels_; ++c) {
      (l.values()[c] < 0 ? lo : hi)[c] = mid[c];
    }
  }
  std::vector<double> out(channels_);
  for (std::int64_t c = 0; c < channels_; ++c) out[c] = 0.5 * (lo[c] + hi[c]);
  return out;
}

HyperAnalysis::HyperAnalysis(ParamStore& store, const std::string& name, std::int64_t latent,
                             std::int64_t hyper, const CrmConfig& crm_config) {
  input = Conv1d::make(store, name + ".input", latent, latent, 3, 1, 1, crm_config.causal);
  CrmConfig c = crm_config;
  c.channels = latent;
  crm = CrmBlock(store, name + ".crm0", c);
  down = Conv1d::make(store, name + ".down", latent, hyper, 4, 2, 1, crm_config.causal);
}

Tensor HyperAnalysis::operator()(const Tensor& y) const {
  return down(ops::elu(crm(input(y))));
}

HyperSynthesis::HyperSynthesis(ParamStore& store, const std::string& name, std::int64_t latent_ch,
                               std::int64_t hyper, const CrmConfig& crm_config)
    : latent(latent_ch) {
  up = ConvTranspose1d::make(store, name + ".up", hyper, latent_ch, 4, 2, crm_config.causal);
  CrmConfig c = crm_config;
  c.channels = latent_ch;
  crm = CrmBlock(store, name + ".crm0", c);
  output = Conv1d::make(store, name + ".output", latent_ch, 2 * latent_ch, 3, 1, 1,
                        crm_config.causal);
}

HyperFeatures HyperSynthesis::operator()(const Tensor& z_hat, std::int64_t frames) const {
  Tensor h = up(z_hat);
  require(h.dim(1) >= frames, ErrorKind::kShape,
          "hyper synthesis produced " + std::to_string(h.dim(1)) + " frames, need " +
              std::to_string(frames));
  if (h.dim(1) != frames) h = ops::slice_cols(h, 0, frames);
  h = output(ops::elu(crm(h)));
  return {ops::slice_rows(h, 0, latent), ops::slice_rows(h, latent, latent)};
}

SliceNet::SliceNet(ParamStore& store, const std::string& name, std::int64_t i,
                   std::int64_t latent, std::int64_t w, std::int64_t hidden,
                   const RwkvConfig& rwkv)
    : index(i), width(w) {
  param_in = Conv1d::make(store, name + ".param_in", 2 * latent + i * w, hidden, 1);
  param_rwkv = RwkvBlock(store, name + ".param_rwkv", hidden, rwkv);
  param_mid = Conv1d::make(store, name + ".param_mid", hidden, hidden, 3);
  param_out = Conv1d::make(store, name + ".param_out", hidden, 2 * w, 1);
  lrp_in = Conv1d::make(store, name + ".lrp_in", latent + (i + 1) * w, hidden, 3);
  lrp_out = Conv1d::make(store, name + ".lrp_out", hidden, w, 1);
}

GaussianParams SliceNet::params(const HyperFeatures& features,
                                const std::vector<Tensor>& context) const {
  Tensor in = ops::concat_rows(with_front({features.mean, features.scale}, context));
  Tensor h = param_rwkv(param_in(in));
  h = param_out(ops::elu(param_mid(ops::elu(h))));
  Tensor sigma = ops::add_scalar(ops::softplus(ops::slice_rows(h, width, width)), kSigmaMin);
  return {ops::slice_rows(h, 0, width), sigma};
}

Tensor SliceNet::residual(const HyperFeatures& features, const std::vector<Tensor>& context,
                          const Tensor& y_hat) const {
  std::vector<Tensor> parts = with_front({features.mean}, context);
  parts.push_back(y_hat);
  Tensor h = lrp_out(ops::elu(lrp_in(ops::concat_rows(parts))));
  return ops::scale(ops::tanh(h), 0.5);
}

void EntropyConfig::validate() const {
  require(slices >= 1 && latent % slices == 0, ErrorKind::kInvalidArgument,
          "latent channels " + std::to_string(latent) + " not divisible into " +
              std::to_string(slices) + " slices");
  require(hyper >= 1 && slice_hidden >= 1, ErrorKind::kInvalidArgument,
          "entropy model widths must be positive");
}

EntropyModel::EntropyModel(ParamStore& store, const std::string& name, const EntropyConfig& cfg)
    : config(cfg) {
  cfg.validate();
  h_a = HyperAnalysis(store, name + ".h_a", cfg.latent, cfg.hyper, cfg.hyper_crm);
  h_s = HyperSynthesis(store, name + ".h_s", cfg.latent, cfg.hyper, cfg.hyper_crm);
  density = FactorizedDensity(store, name + ".density", cfg.hyper);
  for (std::int64_t i = 0; i < cfg.slices; ++i) {
    slices.emplace_back(store, name + ".slice" + std::to_string(i), i, cfg.latent,
                        cfg.slice_width(), cfg.slice_hidden, cfg.rwkv);
  }
}

SliceResult EntropyModel::slice_step(std::int64_t i, const Tensor& y_i,
                                     const std::vector<Tensor>& context,
                                     const HyperFeatures& features, QuantMode mode,
                                     NoiseSource* noise) const {
  require(i >= 0 && i < config.slices, ErrorKind::kInvalidArgument,
          "slice index " + std::to_string(i) + " out of range");
  require(static_cast<std::int64_t>(context.size()) == i, ErrorKind::kInvalidArgument,
          "slice " + std::to_string(i) + " invoked with " + std::to_string(context.size()) +
              " refined slices; slices must be processed in order");
  SliceResult r;
  r.phi = slices[i].params(features, context);
  if (!y_i.defined()) return r;
  require(y_i.shape() == r.phi.mu.shape(), ErrorKind::kShape,
          "slice " + std::to_string(i) + " has shape " + shape_str(y_i.shape()) + ", expected " +
              shape_str(r.phi.mu.shape()));
  if (noise != nullptr) r.y_tilde = quantize(y_i, r.phi.mu, QuantMode::kNoise, noise);
  r.y_hat = mode == QuantMode::kNoise ? r.y_tilde : quantize(y_i, r.phi.mu, QuantMode::kRound, nullptr);
  require(r.y_hat.defined(), ErrorKind::kInvalidArgument, "noise quantization needs a noise source");
  r.residual = slices[i].residual(features, context, r.y_hat);
  r.y_bar = ops::add(r.y_hat, r.residual);
  return r;
}

EntropyOutput entropy_forward_train(const EntropyModel& model, const Tensor& y,
                                    NoiseSource& noise, QuantMode synthesis) {
  const auto& cfg = model.config;
  require(y.rank() == 2 && y.dim(0) == cfg.latent, ErrorKind::kShape,
          "latent must have " + std::to_string(cfg.latent) + " channels, got " +
              shape_str(y.shape()));
  EntropyOutput out;
  Tensor z = model.h_a(y);
  Tensor z_tilde = quantize(z, Tensor(), QuantMode::kNoise, &noise);
  out.rate_z = bits(model.density.likelihood(z_tilde));
  out.diagnostics.z_bits = out.rate_z.item();
  Tensor z_hat = synthesis == QuantMode::kNoise ? z_tilde : ops::round_ste(z);
  HyperFeatures features = model.h_s(z_hat, y.dim(1));

  const std::int64_t w = cfg.slice_width();
  std::vector<Tensor> context;
  for (std::int64_t i = 0; i < cfg.slices; ++i) {
    try {
      SliceResult r = model.slice_step(i, ops::slice_rows(y, i * w, w), context, features,
                                       synthesis, &noise);
      Tensor b = bits(gaussian_likelihood(r.y_tilde, r.phi.mu, r.phi.sigma));
      out.diagnostics.slice_bits.push_back(b.item());
      out.rate_y = out.rate_y.defined() ? ops::add(out.rate_y, b) : b;
      context.push_back(r.y_bar);
    } catch (const Error& e) {
      fail(e.kind(), "slice " + std::to_string(i) + ": " + e.what());
    }
  }
  out.y_bar = ops::concat_rows(context);
  return out;
}

}  // namespace rasc
