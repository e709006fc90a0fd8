#include "rasc/model.hpp"

#include <cmath>

#include "rasc/bytes.hpp"
#include "rasc/ops.hpp"

namespace rasc {

namespace {

constexpr char kConfigPrefix[] = "config.";
constexpr char kLambdaRecord[] = "meta.lambda";

std::int64_t as_int(const std::map<std::string, double>& m, const std::string& key) {
  auto it = m.find(key);
  require(it != m.end(), ErrorKind::kModelLoad, "missing config field " + key);
  const double v = it->second;
  require(std::isfinite(v) && v == std::floor(v), ErrorKind::kModelLoad,
          "config field " + key + " must be an integer");
  return static_cast<std::int64_t>(v);
}

double as_real(const std::map<std::string, double>& m, const std::string& key) {
  auto it = m.find(key);
  require(it != m.end(), ErrorKind::kModelLoad, "missing config field " + key);
  return it->second;
}

}  // namespace

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.backbone.input_channels = 2 * c.stft.bins();
  c.entropy.latent = c.backbone.latent_channels;
  c.entropy.hyper_crm.channels = c.entropy.latent;
  return c;
}

ModelConfig ModelConfig::toy() {
  ModelConfig c;
  c.stft.n_fft = 32;
  c.stft.hop = 8;
  c.backbone.input_channels = 2 * c.stft.bins();
  c.backbone.widths = {8, 8};
  c.backbone.strides = {2, 1};
  c.backbone.n_attn_per_stage = {1, 1};
  c.backbone.latent_channels = 8;
  c.entropy.latent = 8;
  c.entropy.hyper = 4;
  c.entropy.slices = 2;
  c.entropy.slice_hidden = 8;
  c.entropy.hyper_crm.channels = 8;
  c.entropy.rwkv.decay_rank = 2;
  c.backbone.rwkv.decay_rank = 2;
  c.input_scale = 1.0;
  c.precision = Precision::kF64;
  return c;
}

std::int64_t ModelConfig::latent_frames(std::int64_t frames) const {
  const std::int64_t p = backbone.stride_product();
  return padded_frames(frames, p) / p;
}

std::int64_t ModelConfig::hyper_frames(std::int64_t frames) const {
  return (latent_frames(frames) + 1) / 2;
}

void ModelConfig::validate() const {
  stft.validate();
  backbone.validate();
  entropy.validate();
  entropy.hyper_crm.validate();
  require(backbone.input_channels == 2 * stft.bins(), ErrorKind::kInvalidArgument,
          "backbone input channels must equal 2 * (n_fft / 2 + 1)");
  require(backbone.latent_channels == entropy.latent, ErrorKind::kInvalidArgument,
          "backbone and entropy model disagree on latent channels");
  require(entropy.hyper_crm.channels == entropy.latent, ErrorKind::kInvalidArgument,
          "hyper CRM width must equal the latent channel count");
  require(input_scale > 0 && std::isfinite(input_scale), ErrorKind::kInvalidArgument,
          "input_scale must be positive");
}

std::map<std::string, double> ModelConfig::to_map() const {
  std::map<std::string, double> m;
  m["stft.n_fft"] = stft.n_fft;
  m["stft.hop"] = stft.hop;
  m["stft.center"] = stft.center ? 1 : 0;
  m["backbone.input_channels"] = static_cast<double>(backbone.input_channels);
  m["backbone.stages"] = static_cast<double>(backbone.widths.size());
  for (std::size_t i = 0; i < backbone.widths.size(); ++i) {
    const std::string s = "backbone.stage" + std::to_string(i);
    m[s + ".width"] = static_cast<double>(backbone.widths[i]);
    m[s + ".stride"] = static_cast<double>(backbone.strides[i]);
    m[s + ".attn"] = static_cast<double>(backbone.n_attn_per_stage[i]);
  }
  m["backbone.latent_channels"] = static_cast<double>(backbone.latent_channels);
  m["backbone.attn_downsample"] = static_cast<double>(backbone.attn_downsample);
  m["backbone.causal"] = backbone.causal ? 1 : 0;
  m["backbone.rwkv.data_dependent_decay"] = backbone.rwkv.data_dependent_decay ? 1 : 0;
  m["backbone.rwkv.ffn_multiplier"] = static_cast<double>(backbone.rwkv.ffn_multiplier);
  m["backbone.rwkv.decay_rank"] = static_cast<double>(backbone.rwkv.decay_rank);
  m["entropy.latent"] = static_cast<double>(entropy.latent);
  m["entropy.hyper"] = static_cast<double>(entropy.hyper);
  m["entropy.slices"] = static_cast<double>(entropy.slices);
  m["entropy.slice_hidden"] = static_cast<double>(entropy.slice_hidden);
  m["entropy.hyper_crm.channels"] = static_cast<double>(entropy.hyper_crm.channels);
  m["entropy.hyper_crm.attn_downsample"] = static_cast<double>(entropy.hyper_crm.attn_downsample);
  m["entropy.hyper_crm.n_attn_blocks"] = static_cast<double>(entropy.hyper_crm.n_attn_blocks);
  m["entropy.hyper_crm.causal"] = entropy.hyper_crm.causal ? 1 : 0;
  m["entropy.rwkv.data_dependent_decay"] = entropy.rwkv.data_dependent_decay ? 1 : 0;
  m["entropy.rwkv.ffn_multiplier"] = static_cast<double>(entropy.rwkv.ffn_multiplier);
  m["entropy.rwkv.decay_rank"] = static_cast<double>(entropy.rwkv.decay_rank);
  m["input_scale"] = input_scale;
  m["precision"] = static_cast<double>(precision);
  m["seed"] = static_cast<double>(seed);
  return m;
}

ModelConfig ModelConfig::from_map(const std::map<std::string, double>& m) {
  ModelConfig c;
  c.stft.n_fft = static_cast<int>(as_int(m, "stft.n_fft"));
  c.stft.hop = static_cast<int>(as_int(m, "stft.hop"));
  c.stft.center = as_int(m, "stft.center") != 0;
  c.backbone.input_channels = as_int(m, "backbone.input_channels");
  const std::int64_t stages = as_int(m, "backbone.stages");
  require(stages >= 1 && stages <= 16, ErrorKind::kModelLoad, "bad backbone stage count");
  c.backbone.widths.clear();
  c.backbone.strides.clear();
  c.backbone.n_attn_per_stage.clear();
  for (std::int64_t i = 0; i < stages; ++i) {
    const std::string s = "backbone.stage" + std::to_string(i);
    c.backbone.widths.push_back(as_int(m, s + ".width"));
    c.backbone.strides.push_back(as_int(m, s + ".stride"));
    c.backbone.n_attn_per_stage.push_back(as_int(m, s + ".attn"));
  }
  c.backbone.latent_channels = as_int(m, "backbone.latent_channels");
  c.backbone.attn_downsample = as_int(m, "backbone.attn_downsample");
  c.backbone.causal = as_int(m, "backbone.causal") != 0;
  c.backbone.rwkv.data_dependent_decay = as_int(m, "backbone.rwkv.data_dependent_decay") != 0;
  c.backbone.rwkv.ffn_multiplier = as_int(m, "backbone.rwkv.ffn_multiplier");
  c.backbone.rwkv.decay_rank = as_int(m, "backbone.rwkv.decay_rank");
  c.entropy.latent = as_int(m, "entropy.latent");
  c.entropy.hyper = as_int(m, "entropy.hyper");
  c.entropy.slices = as_int(m, "entropy.slices");
  c.entropy.slice_hidden = as_int(m, "entropy.slice_hidden");
  c.entropy.hyper_crm.channels = as_int(m, "entropy.hyper_crm.channels");
  c.entropy.hyper_crm.attn_downsample = as_int(m, "entropy.hyper_crm.attn_downsample");
  c.entropy.hyper_crm.n_attn_blocks = as_int(m, "entropy.hyper_crm.n_attn_blocks");
  c.entropy.hyper_crm.causal = as_int(m, "entropy.hyper_crm.causal") != 0;
  c.entropy.rwkv.data_dependent_decay = as_int(m, "entropy.rwkv.data_dependent_decay") != 0;
  c.entropy.rwkv.ffn_multiplier = as_int(m, "entropy.rwkv.ffn_multiplier");
  c.entropy.rwkv.decay_rank = as_int(m, "entropy.rwkv.decay_rank");
  c.input_scale = as_real(m, "input_scale");
  const std::int64_t p = as_int(m, "precision");
  require(p == 0 || p == 1, ErrorKind::kModelLoad, "bad precision tag in config");
  c.precision = static_cast<Precision>(p);
  c.seed = static_cast<std::uint64_t>(as_int(m, "seed"));
  c.entropy.hyper_crm.rwkv = c.entropy.rwkv;
  try {
    c.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kModelLoad, std::string("invalid model config: ") + e.what());
  }
  return c;
}

Digest8 config_hash(const ModelConfig& config) {
  Checkpoint only_config;
  for (const auto& [k, v] : config.to_map()) {
    only_config.records.push_back({kConfigPrefix + k, Tensor::scalar(v)});
  }
  auto bytes = serialize_checkpoint(only_config);
  return digest8(std::span<const std::uint8_t>(bytes).subspan(16));
}

CodecModel::CodecModel(const ModelConfig& config) : config_(config), store_(config.precision, config.seed) {
  config_.entropy.hyper_crm.rwkv = config_.entropy.rwkv;
  config_.validate();
  encoder = Encoder(store_, "encoder", config_.backbone);
  decoder = Decoder(store_, "decoder", config_.backbone);
  entropy = EntropyModel(store_, "entropy", config_.entropy);
}

Tensor CodecModel::analysis_input(std::span<const double> samples) const {
  Spectrogram spec = stft(samples, config_.stft);
  std::vector<double> v(spec.data.values().begin(), spec.data.values().end());
  for (auto& x : v) x *= config_.input_scale;
  return Tensor::from(spec.data.shape(), std::move(v), config_.precision);
}

Tensor CodecModel::analysis_input(const AudioClip& clip) const {
  std::vector<double> s(clip.samples.begin(), clip.samples.end());
  return analysis_input(s);
}

Tensor CodecModel::synthesize(const Tensor& y_bar, std::int64_t frames, std::int64_t length) const {
  Tensor spec = decoder(y_bar);
  require(spec.dim(1) >= frames, ErrorKind::kShape,
          "decoder produced " + std::to_string(spec.dim(1)) + " frames, need " +
              std::to_string(frames));
  if (spec.dim(1) != frames) spec = ops::slice_cols(spec, 0, frames);
  if (config_.input_scale != 1.0) spec = ops::scale(spec, 1.0 / config_.input_scale);
  return istft(spec, config_.stft, length);
}

TrainForward CodecModel::forward_train(std::span<const double> samples, NoiseSource& noise,
                                       QuantMode synthesis) const {
  TrainForward out;
  Tensor x_f = analysis_input(samples);
  out.frames = x_f.dim(1);
  Tensor y = encoder(x_f);
  out.entropy = entropy_forward_train(entropy, y, noise, synthesis);
  out.x_hat = synthesize(out.entropy.y_bar, out.frames, static_cast<std::int64_t>(samples.size()));
  return out;
}

Checkpoint to_checkpoint(const CodecModel& model) {
  Checkpoint ckpt;
  ckpt.config_hash = config_hash(model.config());
  for (const auto& [k, v] : model.config().to_map()) {
    ckpt.records.push_back({kConfigPrefix + k, Tensor::scalar(v)});
  }
  if (model.lambda) ckpt.records.push_back({kLambdaRecord, Tensor::scalar(*model.lambda)});
  for (const auto& p : model.store().all()) ckpt.records.push_back({p.name(), p.detach()});
  return ckpt;
}

CodecModel from_checkpoint(const Checkpoint& ckpt) {
  std::map<std::string, double> m;
  const std::string prefix = kConfigPrefix;
  for (const auto& r : ckpt.records) {
    if (r.name.rfind(prefix, 0) == 0) {
      require(r.value.numel() == 1, ErrorKind::kModelLoad, "config record " + r.name + " is not a scalar");
      m[r.name.substr(prefix.size())] = r.value.item();
    }
  }
  ModelConfig config = ModelConfig::from_map(m);
  require(config_hash(config) == ckpt.config_hash, ErrorKind::kModelLoad,
          "checkpoint config hash does not match its config records");
  CodecModel model(config);
  std::size_t params = 0;
  for (auto p : model.store().all()) {
    const CheckpointRecord* r = ckpt.find(p.name());
    require(r != nullptr, ErrorKind::kModelLoad, "checkpoint lacks parameter " + p.name());
    require(r->value.shape() == p.shape(), ErrorKind::kModelLoad,
            "parameter " + p.name() + " has shape " + shape_str(r->value.shape()) +
                " in the checkpoint, model expects " + shape_str(p.shape()));
    p.assign(r->value.values());
    ++params;
  }
  if (const CheckpointRecord* r = ckpt.find(kLambdaRecord)) {
    require(r->value.numel() == 1, ErrorKind::kModelLoad, "lambda record is not a scalar");
    model.lambda = r->value.item();
    ++params;
  }
  require(params + m.size() == ckpt.records.size(), ErrorKind::kModelLoad,
          "checkpoint has records the model does not know");
  return model;
}

void save_model(const std::string& path, const CodecModel& model) {
  save_checkpoint(path, to_checkpoint(model));
}

CodecModel load_model(const std::string& path) { return from_checkpoint(load_checkpoint(path)); }

const std::vector<double>& lambda_grid() {
  static const std::vector<double> grid{0.25, 0.8, 2.0, 5.5, 9.0, 18.0};
  return grid;
}

std::uint8_t lambda_index(std::optional<double> lambda) {
  if (!lambda) return kCustomLambda;
  const auto& g = lambda_grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == *lambda) return static_cast<std::uint8_t>(i);
  }
  return kCustomLambda;
}

Digest8 model_fingerprint(const CodecModel& model) {
  return digest8(serialize_checkpoint(to_checkpoint(model)));
}

}  // namespace rasc
