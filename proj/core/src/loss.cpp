#include "rasc/loss.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rasc/ops.hpp"
#include "rasc/spectral.hpp"
#include "rasc/stft.hpp"

namespace rasc {

namespace {

Tensor l1_plus_l2(const Tensor& a, const Tensor& b) {
  Tensor d = ops::sub(a, b);
  return ops::add(ops::mean(ops::abs(d)), ops::mean(ops::square(d)));
}

Tensor log_floor(const Tensor& power) { return ops::log(ops::add_scalar(power, kLogEpsilon)); }

}  // namespace

Distortion distortion(const Tensor& x, const Tensor& x_hat, std::int64_t max_mismatch) {
  require(x.rank() == 1 && x_hat.rank() == 1, ErrorKind::kShape,
          "distortion expects 1-D sample tensors, got " + shape_str(x.shape()) + " and " +
              shape_str(x_hat.shape()));
  const std::int64_t n = std::min(x.dim(0), x_hat.dim(0));
  require(std::abs(x.dim(0) - x_hat.dim(0)) <= max_mismatch, ErrorKind::kShape,
          "distortion inputs differ by " + std::to_string(std::abs(x.dim(0) - x_hat.dim(0))) +
              " samples");
  auto crop = [n](const Tensor& t) {
    return t.dim(0) == n ? t : ops::reshape(ops::slice_cols(ops::reshape(t, {1, t.dim(0)}), 0, n), {n});
  };
  Tensor a = crop(x), b = crop(x_hat);
  Distortion d;
  d.time = ops::mean(ops::abs(ops::sub(a, b)));
  Tensor acc;
  for (int i = kMinLossScale; i <= kMaxLossScale; ++i) {
    const int win = loss_window(i), hop = loss_hop(i);
    const auto& fb = loss_filterbank(i);
    Tensor pa = stft_power(a, win, hop), pb = stft_power(b, win, hop);
    Tensor term = ops::add(l1_plus_l2(log_floor(pa), log_floor(pb)),
                           l1_plus_l2(log_floor(ops::matmul(fb.weights, pa)),
                                      log_floor(ops::matmul(fb.weights, pb))));
    acc = acc.defined() ? ops::add(acc, term) : term;
  }
  d.spectral = ops::scale(acc, 1.0 / (kMaxLossScale - kMinLossScale + 1));
  return d;
}

DistortionValues distortion(const AudioClip& x, const AudioClip& x_hat, std::int64_t max_mismatch) {
  NoGradGuard guard;
  Distortion d = distortion(samples_tensor(x), samples_tensor(x_hat), max_mismatch);
  return {d.time.item(), d.spectral.item()};
}

double mel_distance(const AudioClip& x, const AudioClip& x_hat, std::int64_t max_mismatch) {
  const auto a = static_cast<std::int64_t>(x.samples.size());
  const auto b = static_cast<std::int64_t>(x_hat.samples.size());
  require(std::abs(a - b) <= max_mismatch, ErrorKind::kInvalidArgument,
          "mel_distance: length mismatch " + std::to_string(a) + " vs " + std::to_string(b));
  AudioClip u = x, v = x_hat;
  u.samples.resize(std::min(a, b));
  v.samples.resize(std::min(a, b));
  NoGradGuard guard;
  double acc = 0.0;
  for (int i = kMinLossScale; i <= kMaxLossScale; ++i) {
    acc += ops::mean(ops::abs(ops::sub(mel_spec(u, i).values, mel_spec(v, i).values))).item();
  }
  return acc / (kMaxLossScale - kMinLossScale + 1);
}

double LossReport::recomputed_total() const {
  return rate_y_bits / latent_elements + rate_z_bits / latent_elements + lambda * (l_t + l_f);
}

RdLoss rd_loss(const CodecModel& model, std::span<const double> samples, double lambda,
               NoiseSource& noise, QuantMode synthesis) {
  require(lambda >= 0 && std::isfinite(lambda), ErrorKind::kInvalidArgument,
          "lambda must be finite and >= 0");
  TrainForward f = model.forward_train(samples, noise, synthesis);
  const auto n = static_cast<std::int64_t>(samples.size());
  Tensor x = Tensor::from({n}, std::vector<double>(samples.begin(), samples.end()),
                          model.config().precision);
  Distortion d = distortion(x, f.x_hat);
  const double elements =
      static_cast<double>(f.entropy.y_bar.dim(0)) * static_cast<double>(f.entropy.y_bar.dim(1));

  RdLoss out;
  out.total = ops::add(ops::scale(ops::add(f.entropy.rate_y, f.entropy.rate_z), 1.0 / elements),
                       ops::scale(ops::add(d.time, d.spectral), lambda));
  LossReport& r = out.report;
  r.rate_y_bits = f.entropy.rate_y.item();
  r.rate_z_bits = f.entropy.rate_z.item();
  r.latent_elements = elements;
  r.l_t = d.time.item();
  r.l_f = d.spectral.item();
  r.lambda = lambda;
  r.total = r.recomputed_total();
  if (!std::isfinite(r.total)) {
    std::ostringstream os;
    os << "non-finite loss: rate_y " << r.rate_y_bits << " rate_z " << r.rate_z_bits << " l_t "
       << r.l_t << " l_f " << r.l_f;
    fail(ErrorKind::kNumeric, os.str());
  }
  return out;
}

}  // namespace rasc
