#include "rasc/rwkv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rasc/ops.hpp"

namespace rasc {

Tensor wkv(const Tensor& k, const Tensor& v, const Tensor& decay, const Tensor& bonus,
           WkvState* state) {
  require(k.rank() == 2 && k.shape() == v.shape(), ErrorKind::kShape,
          "wkv: key/value shapes " + shape_str(k.shape()) + " vs " + shape_str(v.shape()));
  const std::int64_t c = k.dim(0), t_len = k.dim(1);
  const bool per_step = decay.rank() == 2;
  require((decay.rank() == 1 && decay.dim(0) == c) || (per_step && decay.shape() == k.shape()),
          ErrorKind::kShape, "wkv: decay shape " + shape_str(decay.shape()));
  require(bonus.rank() == 1 && bonus.dim(0) == c, ErrorKind::kShape,
          "wkv: bonus shape " + shape_str(bonus.shape()));
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  std::vector<double> init_num(c, 0.0), init_den(c, 0.0), init_shift(c, kNegInf);
  if (state && !state->empty()) {
    require(static_cast<std::int64_t>(state->num.size()) == c, ErrorKind::kShape,
            "wkv: state has wrong channel count");
    init_num = state->num;
    init_den = state->den;
    init_shift = state->max_shift;
  }

  auto kv = k.values(), vv = v.values(), wv = decay.values(), uv = bonus.values();
  auto w_at = [&](std::int64_t ch, std::int64_t t) { return per_step ? wv[ch * t_len + t] : wv[ch]; };
  std::vector<double> out(c * t_len);
  std::vector<double> fin_num(c), fin_den(c), fin_shift(c);
  for (std::int64_t ch = 0; ch < c; ++ch) {
    double aa = init_num[ch], bb = init_den[ch], pp = init_shift[ch];
    for (std::int64_t t = 0; t < t_len; ++t) {
      const double kt = kv[ch * t_len + t], vt = vv[ch * t_len + t];
      double ww = uv[ch] + kt;
      double p = std::max(pp, ww);
      double e1 = std::exp(pp - p), e2 = std::exp(ww - p);
      out[ch * t_len + t] = (e1 * aa + e2 * vt) / (e1 * bb + e2);
      ww = pp - w_at(ch, t);
      p = std::max(ww, kt);
      e1 = std::exp(ww - p);
      e2 = std::exp(kt - p);
      aa = e1 * aa + e2 * vt;
      bb = e1 * bb + e2;
      pp = p;
    }
    fin_num[ch] = aa;
    fin_den[ch] = bb;
    fin_shift[ch] = pp;
  }
  if (state) {
    state->num = fin_num;
    state->den = fin_den;
    state->max_shift = fin_shift;
  }

  return make_result(
      "wkv", {c, t_len}, std::move(out), {k, v, decay, bonus},
      [=](const BackwardContext& ctx) {
        auto g = ctx.grad();
        auto kv = ctx.input(0), vv = ctx.input(1), wv = ctx.input(2), uv = ctx.input(3);
        double* gk = ctx.input_grad(0);
        double* gv = ctx.input_grad(1);
        double* gw = ctx.input_grad(2);
        double* gu = ctx.input_grad(3);
        std::vector<double> a(t_len + 1), b(t_len + 1), ek(t_len), den(t_len), y(t_len);
        for (std::int64_t ch = 0; ch < c; ++ch) {
          // Shift all exponents by a per-channel constant; ratios are unchanged.
          double shift = init_shift[ch];
          for (std::int64_t t = 0; t < t_len; ++t) shift = std::max(shift, kv[ch * t_len + t]);
          const double scale0 = std::isinf(init_shift[ch]) ? 0.0 : std::exp(init_shift[ch] - shift);
          a[0] = init_num[ch] * scale0;
          b[0] = init_den[ch] * scale0;
          const double eu = std::exp(uv[ch]);
          auto wt = [&](std::int64_t t) { return per_step ? wv[ch * t_len + t] : wv[ch]; };
          for (std::int64_t t = 0; t < t_len; ++t) {
            ek[t] = std::exp(kv[ch * t_len + t] - shift);
            const double vt = vv[ch * t_len + t];
            den[t] = b[t] + eu * ek[t];
            y[t] = (a[t] + eu * ek[t] * vt) / den[t];
            const double decay_t = std::exp(-wt(t));
            a[t + 1] = decay_t * a[t] + ek[t] * vt;
            b[t + 1] = decay_t * b[t] + ek[t];
          }
          double ga = 0.0, gb = 0.0;  // d loss / d a_{t+1}, b_{t+1}
          double gu_acc = 0.0, gw_acc = 0.0;
          for (std::int64_t t = t_len - 1; t >= 0; --t) {
            const std::int64_t i = ch * t_len + t;
            const double vt = vv[i];
            const double g_num = g[i] / den[t];
            const double g_den = -g[i] * y[t] / den[t];
            const double cur = eu * ek[t];
            if (gv) gv[i] += g_num * cur + ga * ek[t];
            if (gk) gk[i] += g_num * cur * vt + g_den * cur + ga * ek[t] * vt + gb * ek[t];
            gu_acc += g_num * cur * vt + g_den * cur;
            const double decay_t = std::exp(-wt(t));
            const double dw = -decay_t * (a[t] * ga + b[t] * gb);
            if (per_step) {
              if (gw) gw[i] += dw;
            } else {
              gw_acc += dw;
            }
            ga = g_num + decay_t * ga;
            gb = g_den + decay_t * gb;
          }
          if (gu) gu[ch] += gu_acc;
          if (gw && !per_step) gw[ch] += gw_acc;
        }
      });
}

namespace {

// Previous-step column for each time step: [prev, x_0, ..., x_{T-2}].
Tensor token_shift(const Tensor& x, const std::vector<double>* carried) {
  const std::int64_t c = x.dim(0), t = x.dim(1);
  Tensor prev = (carried && !carried->empty())
                    ? Tensor::from({c, 1}, *carried, x.precision())
                    : Tensor::zeros({c, 1}, x.precision());
  if (t == 1) return prev;
  return ops::concat_cols({prev, ops::slice_cols(x, 0, t - 1)});
}

std::vector<double> last_column(const Tensor& x) {
  const std::int64_t c = x.dim(0), t = x.dim(1);
  std::vector<double> col(c);
  for (std::int64_t i = 0; i < c; ++i) col[i] = x(i, t - 1);
  return col;
}

// sx + (x - sx) * mix
Tensor interpolate(const Tensor& x, const Tensor& sx, const Tensor& mix) {
  return ops::add(sx, ops::mul_channel(ops::sub(x, sx), mix));
}

std::vector<double> ramp(std::int64_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (std::int64_t i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

}  // namespace

TimeMix::TimeMix(ParamStore& store, const std::string& name, std::int64_t channels,
                 const RwkvConfig& config) {
  receptance = Linear::make(store, name + ".receptance", channels, channels, false);
  key = Linear::make(store, name + ".key", channels, channels, false);
  value = Linear::make(store, name + ".value", channels, channels, false);
  output = Linear::make(store, name + ".output", channels, channels, false, Linear::Init::kZero);
  mix_r = store.add(name + ".mix_r", {channels}, ramp(channels, 0.3, 0.7));
  mix_k = store.add(name + ".mix_k", {channels}, ramp(channels, 0.6, 0.9));
  mix_v = store.add(name + ".mix_v", {channels}, ramp(channels, 0.5, 0.8));
  // Decay rates spread from slow to fast across channels.
  time_decay = store.add(name + ".time_decay", {channels}, ramp(channels, -3.0, 1.0));
  time_first = store.constant(name + ".time_first", {channels}, 0.0);
  data_dependent = config.data_dependent_decay;
  if (data_dependent) {
    mix_w = store.add(name + ".mix_w", {channels}, ramp(channels, 0.4, 0.6));
    decay_down = Linear::make(store, name + ".decay_down", channels, config.decay_rank, false);
    decay_up = Linear::make(store, name + ".decay_up", config.decay_rank, channels, false,
                            Linear::Init::kZero);
  }
}

Tensor TimeMix::operator()(const Tensor& x, RwkvState* state) const {
  Tensor sx = token_shift(x, state ? &state->time_shift : nullptr);
  Tensor k = key(interpolate(x, sx, mix_k));
  Tensor v = value(interpolate(x, sx, mix_v));
  Tensor r = receptance(interpolate(x, sx, mix_r));
  Tensor decay;
  if (data_dependent) {
    Tensor xw = interpolate(x, sx, mix_w);
    decay = ops::exp(ops::add_bias(decay_up(ops::tanh(decay_down(xw))), time_decay));
  } else {
    decay = ops::exp(time_decay);
  }
  Tensor mixed = wkv(k, v, decay, time_first, state ? &state->wkv : nullptr);
  if (state) state->time_shift = last_column(x);
  return output(ops::mul(ops::sigmoid(r), mixed));
}

ChannelMix::ChannelMix(ParamStore& store, const std::string& name, std::int64_t channels,
                       const RwkvConfig& config) {
  const std::int64_t hidden = channels * config.ffn_multiplier;
  receptance = Linear::make(store, name + ".receptance", channels, channels, false);
  key = Linear::make(store, name + ".key", channels, hidden, false);
  value = Linear::make(store, name + ".value", hidden, channels, false, Linear::Init::kZero);
  mix_r = store.add(name + ".mix_r", {channels}, ramp(channels, 0.3, 0.7));
  mix_k = store.add(name + ".mix_k", {channels}, ramp(channels, 0.6, 0.9));
}

Tensor ChannelMix::operator()(const Tensor& x, RwkvState* state) const {
  Tensor sx = token_shift(x, state ? &state->channel_shift : nullptr);
  Tensor k = ops::square(ops::relu(key(interpolate(x, sx, mix_k))));
  Tensor r = ops::sigmoid(receptance(interpolate(x, sx, mix_r)));
  if (state) state->channel_shift = last_column(x);
  return ops::mul(r, value(k));
}

RwkvBlock::RwkvBlock(ParamStore& store, const std::string& name, std::int64_t channels,
                     const RwkvConfig& config)
    : time_mix(store, name + ".time_mix", channels, config),
      channel_mix(store, name + ".channel_mix", channels, config) {}

Tensor RwkvBlock::operator()(const Tensor& x, RwkvState* state) const {
  Tensor h = ops::add(x, time_mix(x, state));
  return ops::add(h, channel_mix(h, state));
}

}  // namespace rasc
