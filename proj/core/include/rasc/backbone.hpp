#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rasc/layers.hpp"
#include "rasc/rwkv.hpp"
#include "rasc/stft.hpp"

namespace rasc {

struct CrmConfig {
  std::int64_t channels = 64;
  std::int64_t attn_downsample = 2;
  std::int64_t n_attn_blocks = 1;
  bool causal = true;
  RwkvConfig rwkv;

  void validate() const;
};

struct BackboneConfig {
  std::int64_t input_channels = 514;
  std::vector<std::int64_t> widths{64, 128, 192};
  std::vector<std::int64_t> strides{2, 2, 1};
  std::vector<std::int64_t> n_attn_per_stage{1, 2, 4};
  std::int64_t latent_channels = 32;
  std::int64_t attn_downsample = 2;
  bool causal = true;
  RwkvConfig rwkv;

  std::int64_t stride_product() const;
  CrmConfig crm(std::size_t stage) const;
  void validate() const;
};

// x + conv1x1(ELU(conv_k3(ELU(x)))), length preserving.
class SeanetUnit {
 public:
  SeanetUnit() = default;
  SeanetUnit(ParamStore& store, const std::string& name, std::int64_t channels,
             std::int64_t dilation, bool causal, Conv1d::Init second = Conv1d::Init::kDefault);

  Tensor operator()(const Tensor& x) const;

  Conv1d conv1, conv2;
};

// 1x1 conv, channel split, SEANet unit on one half and strided-down RWKV
// stack (with a skip around it) on the other, concat, 1x1 fuse.
class CrmBlock {
 public:
  CrmBlock() = default;
  CrmBlock(ParamStore& store, const std::string& name, const CrmConfig& config);

  Tensor operator()(const Tensor& x) const;
  // The convolutional half alone plus the down/up path with the RWKV stack
  // removed; matches operator() while attention outputs are zero.
  Tensor without_attention(const Tensor& x) const;

  CrmConfig config;
  Conv1d in_proj, fuse;
  SeanetUnit seanet;
  Conv1d down;
  std::vector<RwkvBlock> attention;
  ConvTranspose1d up;

 private:
  Tensor forward(const Tensor& x, bool use_attention) const;
};

// g_a: spectrogram channels [2F x T] -> latent [C x T / stride_product].
// T is right-padded with zero frames to a multiple of the stride product.
class Encoder {
 public:
  Encoder() = default;
  Encoder(ParamStore& store, const std::string& name, const BackboneConfig& config);

  Tensor operator()(const Tensor& x) const;

  BackboneConfig config;
  Conv1d input;
  std::vector<CrmBlock> stages;
  std::vector<Conv1d> downsample;
};

// g_s: latent [C x T_y] -> spectrogram channels [2F x T_y * stride_product].
class Decoder {
 public:
  Decoder() = default;
  Decoder(ParamStore& store, const std::string& name, const BackboneConfig& config);

  Tensor operator()(const Tensor& latent) const;

  BackboneConfig config;
  std::vector<ConvTranspose1d> upsample;  // in stage order 0..n-1
  std::vector<CrmBlock> stages;
  Conv1d output;
};

std::int64_t padded_frames(std::int64_t frames, std::int64_t multiple);

}  // namespace rasc
