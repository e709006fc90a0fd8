#include "rasc/codec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rasc/ops.hpp"

namespace rasc {

namespace {

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    fail(e.kind(), std::string(name) + ": " + e.what());
  }
}

Tensor symbols_tensor(const std::vector<std::int64_t>& symbols, Shape shape, Precision precision) {
  std::vector<double> v(symbols.begin(), symbols.end());
  return Tensor::from(std::move(shape), std::move(v), precision);
}

}  // namespace

Codec::Codec(const CodecModel& model) : model_(model) {
  tables_ = stage("build tables", [&] { return build_cdf_tables(model.entropy.density); });
  fingerprint_ = model_fingerprint(model);
}

Tensor Codec::z_tensor(const std::vector<std::int64_t>& symbols, std::int64_t frames) const {
  return symbols_tensor(symbols, {model_.config().entropy.hyper, frames}, model_.config().precision);
}

GaussianParams Codec::slice_params(const std::vector<std::int64_t>& z_symbols,
                                   std::int64_t latent_frames,
                                   const std::vector<Tensor>& context) const {
  NoGradGuard guard;
  const auto& entropy = model_.entropy;
  const std::int64_t tz = static_cast<std::int64_t>(z_symbols.size()) / entropy.config.hyper;
  HyperFeatures features = entropy.h_s(z_tensor(z_symbols, tz), latent_frames);
  return entropy.slice_step(static_cast<std::int64_t>(context.size()), Tensor(), context,
                            features, QuantMode::kRound, nullptr)
      .phi;
}

CompressResult Codec::compress(const AudioClip& clip) const {
  NoGradGuard guard;
  require(clip.sample_rate == kSampleRate, ErrorKind::kUnsupportedFormat,
          "unsupported sample rate " + std::to_string(clip.sample_rate));
  require(!clip.samples.empty(), ErrorKind::kInvalidArgument, "cannot compress an empty clip");
  const auto& cfg = model_.config();
  const auto& entropy = model_.entropy;
  CompressResult out;
  Container& c = out.container;
  CodecTrace& trace = out.trace;
  c.model_hash = fingerprint_;
  c.sample_rate = static_cast<std::uint32_t>(clip.sample_rate);
  c.samples = clip.samples.size();
  c.lambda_index = lambda_index(model_.lambda);

  Tensor x_f = stage("stft", [&] { return model_.analysis_input(clip); });
  c.frames = static_cast<std::uint32_t>(x_f.dim(1));
  Tensor y = stage("analysis", [&] { return model_.encoder(x_f); });
  trace.latent_frames = y.dim(1);
  Tensor z = stage("hyper analysis", [&] { return entropy.h_a(y); });
  const std::int64_t cz = z.dim(0), tz = z.dim(1);

  stage("hyper-latent coding", [&] {
    auto zv = z.values();
    RangeEncoder enc;
    trace.z_symbols.resize(zv.size());
    for (std::int64_t ch = 0; ch < cz; ++ch) {
      for (std::int64_t t = 0; t < tz; ++t) {
        const auto s = static_cast<std::int64_t>(ops::round_half_away(zv[ch * tz + t]));
        trace.z_symbols[ch * tz + t] = s;
        enc.encode_symbol(tables_.z[ch], s);
      }
    }
    c.z_stream = enc.finish();
    Tensor lik = entropy.density.likelihood(z_tensor(trace.z_symbols, tz));
    for (double p : lik.values()) trace.estimated_z_bits -= std::log2(p);
    return 0;
  });

  HyperFeatures features =
      stage("hyper synthesis", [&] { return entropy.h_s(z_tensor(trace.z_symbols, tz), y.dim(1)); });

  const std::int64_t w = entropy.config.slice_width();
  std::vector<Tensor> context;
  for (std::int64_t i = 0; i < entropy.config.slices; ++i) {
    stage("slice coding", [&] {
      SliceTrace st;
      GaussianParams phi =
          entropy.slice_step(i, Tensor(), context, features, QuantMode::kRound, nullptr).phi;
      Tensor y_i = ops::slice_rows(y, i * w, w);
      st.symbols = coding_symbols(y_i, phi.mu);
      RangeEncoder enc;
      auto sv = phi.sigma.values();
      for (std::size_t k = 0; k < st.symbols.size(); ++k) {
        const int j = scale_table().index(sv[k]);
        st.scale_indices.push_back(j);
        enc.encode_symbol(tables_.y[j], st.symbols[k]);
        trace.estimated_y_bits -= std::log2(gaussian_pmf(st.symbols[k], 0.0, sv[k]));
      }
      c.slice_streams.push_back(enc.finish());
      Tensor y_hat = ops::add(symbols_tensor(st.symbols, phi.mu.shape(), cfg.precision), phi.mu);
      st.y_bar = ops::add(y_hat, entropy.slices[i].residual(features, context, y_hat));
      st.mu = phi.mu;
      st.sigma = phi.sigma;
      context.push_back(st.y_bar);
      trace.slices.push_back(std::move(st));
      return 0;
    });
  }
  trace.y_bar = ops::concat_rows(context);
  return out;
}

DecompressResult Codec::decompress(const Container& c) const {
  NoGradGuard guard;
  const auto& cfg = model_.config();
  const auto& entropy = model_.entropy;
  require(c.model_hash == fingerprint_, ErrorKind::kBitstream,
          "container was produced with model " + hex(c.model_hash) + ", loaded model is " +
              hex(fingerprint_));
  require(c.sample_rate == static_cast<std::uint32_t>(kSampleRate), ErrorKind::kUnsupportedFormat,
          "unsupported sample rate " + std::to_string(c.sample_rate));
  require(c.samples > 0 && c.samples < (std::uint64_t{1} << 40), ErrorKind::kBitstream,
          "implausible sample count " + std::to_string(c.samples));
  const auto length = static_cast<std::int64_t>(c.samples);
  require(cfg.stft.frames(length) == static_cast<std::int64_t>(c.frames), ErrorKind::kBitstream,
          "frame count " + std::to_string(c.frames) + " does not match " + std::to_string(length) +
              " samples");
  require(static_cast<std::int64_t>(c.slice_streams.size()) == entropy.config.slices,
          ErrorKind::kBitstream,
          "container has " + std::to_string(c.slice_streams.size()) + " slice streams, model uses " +
              std::to_string(entropy.config.slices));

  DecompressResult out;
  CodecTrace& trace = out.trace;
  const std::int64_t ty = cfg.latent_frames(c.frames);
  const std::int64_t tz = cfg.hyper_frames(c.frames);
  const std::int64_t cz = entropy.config.hyper;
  trace.latent_frames = ty;

  stage("hyper-latent decoding", [&] {
    RangeDecoder dec(c.z_stream);
    trace.z_symbols.resize(cz * tz);
    for (std::int64_t ch = 0; ch < cz; ++ch) {
      for (std::int64_t t = 0; t < tz; ++t) trace.z_symbols[ch * tz + t] = dec.decode_symbol(tables_.z[ch]);
    }
    dec.finish();
    return 0;
  });
  HyperFeatures features =
      stage("hyper synthesis", [&] { return entropy.h_s(z_tensor(trace.z_symbols, tz), ty); });

  std::vector<Tensor> context;
  for (std::int64_t i = 0; i < entropy.config.slices; ++i) {
    stage("slice decoding", [&] {
      SliceTrace st;
      GaussianParams phi =
          entropy.slice_step(i, Tensor(), context, features, QuantMode::kRound, nullptr).phi;
      RangeDecoder dec(c.slice_streams[i]);
      auto sv = phi.sigma.values();
      st.symbols.resize(sv.size());
      for (std::size_t k = 0; k < sv.size(); ++k) {
        const int j = scale_table().index(sv[k]);
        st.scale_indices.push_back(j);
        st.symbols[k] = dec.decode_symbol(tables_.y[j]);
      }
      dec.finish();
      Tensor y_hat = ops::add(symbols_tensor(st.symbols, phi.mu.shape(), cfg.precision), phi.mu);
      st.y_bar = ops::add(y_hat, entropy.slices[i].residual(features, context, y_hat));
      st.mu = phi.mu;
      st.sigma = phi.sigma;
      context.push_back(st.y_bar);
      trace.slices.push_back(std::move(st));
      return 0;
    });
  }
  trace.y_bar = ops::concat_rows(context);

  Tensor x_hat = stage("synthesis", [&] { return model_.synthesize(trace.y_bar, c.frames, length); });
  out.audio.sample_rate = kSampleRate;
  out.audio.samples.resize(length);
  auto xv = x_hat.values();
  for (std::int64_t n = 0; n < length; ++n) {
    out.audio.samples[n] = static_cast<float>(std::clamp(xv[n], -1.0, 1.0));
  }
  return out;
}

}  // namespace rasc
