#include "rasc/backbone.hpp"

#include "rasc/ops.hpp"

namespace rasc {

namespace {

std::int64_t sampling_kernel(std::int64_t stride) { return stride == 1 ? 3 : 2 * stride; }

}  // namespace

void CrmConfig::validate() const {
  require(channels >= 2 && channels % 2 == 0, ErrorKind::kInvalidArgument,
          "CRM channels must be even, got " + std::to_string(channels));
  require(attn_downsample == 1 || attn_downsample == 2 || attn_downsample == 4,
          ErrorKind::kInvalidArgument,
          "CRM attn_downsample must be 1, 2 or 4, got " + std::to_string(attn_downsample));
  require(n_attn_blocks >= 0, ErrorKind::kInvalidArgument, "CRM n_attn_blocks must be >= 0");
}

std::int64_t BackboneConfig::stride_product() const {
  std::int64_t p = 1;
  for (auto s : strides) p *= s;
  return p;
}

CrmConfig BackboneConfig::crm(std::size_t stage) const {
  CrmConfig c;
  c.channels = widths[stage];
  c.attn_downsample = attn_downsample;
  c.n_attn_blocks = n_attn_per_stage[stage];
  c.causal = causal;
  c.rwkv = rwkv;
  return c;
}

void BackboneConfig::validate() const {
  require(!widths.empty() && widths.size() == strides.size() &&
              widths.size() == n_attn_per_stage.size(),
          ErrorKind::kInvalidArgument,
          "backbone widths, strides and n_attn_per_stage must have equal nonzero length");
  for (std::size_t i = 0; i < widths.size(); ++i) {
    require(strides[i] >= 1, ErrorKind::kInvalidArgument, "backbone strides must be >= 1");
    if (i > 0) {
      require(n_attn_per_stage[i] >= n_attn_per_stage[i - 1], ErrorKind::kInvalidArgument,
              "deeper stages need at least as many attention blocks as shallower ones");
    }
    crm(i).validate();
  }
  require(input_channels >= 1 && latent_channels >= 1, ErrorKind::kInvalidArgument,
          "backbone channel counts must be positive");
}

std::int64_t padded_frames(std::int64_t frames, std::int64_t multiple) {
  return (frames + multiple - 1) / multiple * multiple;
}

SeanetUnit::SeanetUnit(ParamStore& store, const std::string& name, std::int64_t channels,
                       std::int64_t dilation, bool causal, Conv1d::Init second) {
  conv1 = Conv1d::make(store, name + ".conv1", channels, channels, 3, 1, dilation, causal);
  conv2 = Conv1d::make(store, name + ".conv2", channels, channels, 1, 1, 1, causal, second);
}

Tensor SeanetUnit::operator()(const Tensor& x) const {
  return ops::add(x, conv2(ops::elu(conv1(ops::elu(x)))));
}

CrmBlock::CrmBlock(ParamStore& store, const std::string& name, const CrmConfig& cfg)
    : config(cfg) {
  cfg.validate();
  const std::int64_t c = cfg.channels, half = c / 2, d = cfg.attn_downsample;
  in_proj = Conv1d::make(store, name + ".in_proj", c, c, 1, 1, 1, cfg.causal);
  seanet = SeanetUnit(store, name + ".seanet", half, 1, cfg.causal);
  const std::int64_t k = d == 1 ? 1 : 2 * d;
  down = Conv1d::make(store, name + ".down", half, half, k, d, 1, cfg.causal);
  for (std::int64_t i = 0; i < cfg.n_attn_blocks; ++i) {
    attention.emplace_back(store, name + ".attn" + std::to_string(i), half, cfg.rwkv);
  }
  up = ConvTranspose1d::make(store, name + ".up", half, half, k, d, cfg.causal);
  fuse = Conv1d::make(store, name + ".fuse", c, c, 1, 1, 1, cfg.causal);
}

Tensor CrmBlock::forward(const Tensor& x, bool use_attention) const {
  require(x.rank() == 2 && x.dim(0) == config.channels, ErrorKind::kShape,
          "CRM block expects " + std::to_string(config.channels) + " channels, got " +
              shape_str(x.shape()));
  const std::int64_t t = x.dim(1), half = config.channels / 2;
  Tensor h = in_proj(x);
  Tensor conv_half = seanet(ops::slice_rows(h, 0, half));
  Tensor attn_in = ops::slice_rows(h, half, half);
  Tensor a = down(attn_in);
  if (use_attention) {
    for (const auto& block : attention) a = block(a);
  }
  Tensor restored = up(a);
  if (restored.dim(1) != t) restored = ops::slice_cols(restored, 0, t);
  Tensor attn_half = ops::add(attn_in, restored);
  return fuse(ops::concat_rows({conv_half, attn_half}));
}

Tensor CrmBlock::operator()(const Tensor& x) const { return forward(x, true); }

Tensor CrmBlock::without_attention(const Tensor& x) const { return forward(x, false); }

Encoder::Encoder(ParamStore& store, const std::string& name, const BackboneConfig& cfg)
    : config(cfg) {
  cfg.validate();
  input = Conv1d::make(store, name + ".input", cfg.input_channels, cfg.widths[0], 7, 1, 1,
                       cfg.causal);
  const std::size_t n = cfg.widths.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::string stage = name + ".stage" + std::to_string(i);
    stages.emplace_back(store, stage + ".crm0", cfg.crm(i));
    const std::int64_t out = i + 1 < n ? cfg.widths[i + 1] : cfg.latent_channels;
    downsample.push_back(Conv1d::make(store, stage + ".down", cfg.widths[i], out,
                                      sampling_kernel(cfg.strides[i]), cfg.strides[i], 1,
                                      cfg.causal));
  }
}

Tensor Encoder::operator()(const Tensor& x) const {
  require(x.rank() == 2 && x.dim(0) == config.input_channels, ErrorKind::kShape,
          "encoder expects " + std::to_string(config.input_channels) + " input channels, got " +
              shape_str(x.shape()));
  const std::int64_t t = x.dim(1);
  Tensor h = ops::pad_cols(x, 0, padded_frames(t, config.stride_product()) - t);
  h = input(h);
  for (std::size_t i = 0; i < stages.size(); ++i) {
    h = stages[i](h);
    h = downsample[i](ops::elu(h));
  }
  return h;
}

Decoder::Decoder(ParamStore& store, const std::string& name, const BackboneConfig& cfg)
    : config(cfg) {
  cfg.validate();
  const std::size_t n = cfg.widths.size();
  upsample.resize(n);
  stages.resize(n);
  // Mirror of the encoder: deepest stage first.
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = n - 1 - r;
    const std::string stage = name + ".stage" + std::to_string(i);
    const std::int64_t in = i + 1 < n ? cfg.widths[i + 1] : cfg.latent_channels;
    upsample[i] = ConvTranspose1d::make(store, stage + ".up", in, cfg.widths[i],
                                        sampling_kernel(cfg.strides[i]), cfg.strides[i],
                                        cfg.causal);
    stages[i] = CrmBlock(store, stage + ".crm0", cfg.crm(i));
  }
  output = Conv1d::make(store, name + ".output", cfg.widths[0], cfg.input_channels, 7, 1, 1,
                        cfg.causal);
}

Tensor Decoder::operator()(const Tensor& latent) const {
  require(latent.rank() == 2 && latent.dim(0) == config.latent_channels, ErrorKind::kShape,
          "decoder expects " + std::to_string(config.latent_channels) +
              " latent channels, got " + shape_str(latent.shape()));
  Tensor h = latent;
  const std::size_t n = stages.size();
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = n - 1 - r;
    h = upsample[i](r == 0 ? h : ops::elu(h));
    h = stages[i](h);
  }
  return output(ops::elu(h));
}

}  // namespace rasc
