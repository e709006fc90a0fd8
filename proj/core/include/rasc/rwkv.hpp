#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rasc/layers.hpp"
#include "rasc/tensor.hpp"

namespace rasc {

// Running accumulators of the WKV recurrence per channel. The weighted sums
// are stored as num * e^{max_shift} and den * e^{max_shift}.
struct WkvState {
  std::vector<double> num;
  std::vector<double> den;
  std::vector<double> max_shift;

  bool empty() const { return num.empty(); }
};

// Causal weighted key-value mixing:
//   out_t = (sum_{j<t} e^{-(t-1-j) w + k_j} v_j + e^{u + k_t} v_t)
//         / (sum_{j<t} e^{-(t-1-j) w + k_j}     + e^{u + k_t})
// k, v: [C x T]; decay w: [C] (static) or [C x T] (per step, applied after
// step t); bonus u: [C]. When `state` is given it seeds and receives the
// accumulators, so chunked calls match one full-sequence call.
Tensor wkv(const Tensor& k, const Tensor& v, const Tensor& decay, const Tensor& bonus,
           WkvState* state = nullptr);

struct RwkvConfig {
  bool data_dependent_decay = false;
  std::int64_t ffn_multiplier = 2;
  std::int64_t decay_rank = 8;
};

// Everything needed to continue a sequence chunk by chunk.
struct RwkvState {
  WkvState wkv;
  std::vector<double> time_shift;     // last input column of the time mix
  std::vector<double> channel_shift;  // last input column of the channel mix
};

class TimeMix {
 public:
  TimeMix() = default;
  TimeMix(ParamStore& store, const std::string& name, std::int64_t channels,
          const RwkvConfig& config);

  Tensor operator()(const Tensor& x, RwkvState* state = nullptr) const;

  Linear receptance, key, value, output;
  Tensor mix_r, mix_k, mix_v, mix_w;
  Tensor time_decay;  // decay = exp(time_decay)
  Tensor time_first;  // bonus u
  Linear decay_down, decay_up;  // data-dependent decay only
  bool data_dependent = false;
};

class ChannelMix {
 public:
  ChannelMix() = default;
  ChannelMix(ParamStore& store, const std::string& name, std::int64_t channels,
             const RwkvConfig& config);

  Tensor operator()(const Tensor& x, RwkvState* state = nullptr) const;

  Linear receptance, key, value;
  Tensor mix_r, mix_k;
};

// x + time_mix(x), then + channel_mix(.)
class RwkvBlock {
 public:
  RwkvBlock() = default;
  RwkvBlock(ParamStore& store, const std::string& name, std::int64_t channels,
            const RwkvConfig& config);

  Tensor operator()(const Tensor& x, RwkvState* state = nullptr) const;

  TimeMix time_mix;
  ChannelMix channel_mix;
};

}  // namespace rasc
