#include "rasc/layers.hpp"

#include <cmath>

namespace rasc {

Tensor ParamStore::add(const std::string& name, Shape shape, std::vector<double> values) {
  require(find(name) == nullptr, ErrorKind::kInvalidArgument, "duplicate parameter " + name);
  params_.push_back(Tensor::parameter(name, std::move(shape), std::move(values), precision_));
  return params_.back();
}

Tensor ParamStore::normal(const std::string& name, Shape shape, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = dist(rng_);
  return add(name, std::move(shape), std::move(v));
}

Tensor ParamStore::uniform(const std::string& name, Shape shape, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = dist(rng_);
  return add(name, std::move(shape), std::move(v));
}

Tensor ParamStore::constant(const std::string& name, Shape shape, double value) {
  std::vector<double> v(numel(shape), value);
  return add(name, std::move(shape), std::move(v));
}

const Tensor* ParamStore::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name() == name) return &p;
  }
  return nullptr;
}

std::int64_t ParamStore::count() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += p.numel();
  return n;
}

Conv1d Conv1d::make(ParamStore& store, const std::string& name, std::int64_t in,
                    std::int64_t out, std::int64_t kernel, std::int64_t stride,
                    std::int64_t dilation, bool causal, Init init) {
  require(kernel >= stride, ErrorKind::kInvalidArgument,
          name + ": kernel must be >= stride");
  Conv1d c;
  const double stddev = 1.0 / std::sqrt(static_cast<double>(in * kernel));
  if (init == Init::kZero) {
    c.weight = store.constant(name + ".weight", {out, in, kernel}, 0.0);
  } else {
    c.weight = store.normal(name + ".weight", {out, in, kernel}, stddev);
  }
  c.bias = store.constant(name + ".bias", {out}, 0.0);
  c.stride = stride;
  c.dilation = dilation;
  c.causal = causal;
  return c;
}

Tensor Conv1d::operator()(const Tensor& x) const {
  const std::int64_t t = x.dim(1);
  const std::int64_t total = dilation * (kernel() - 1) + 1 - stride;
  const std::int64_t tail = (stride - t % stride) % stride;
  ops::ConvOptions opts;
  opts.stride = stride;
  opts.dilation = dilation;
  opts.pad.left = causal ? total : total / 2;
  opts.pad.right = total - opts.pad.left + tail;
  return ops::conv1d(x, weight, bias, opts);
}

ConvTranspose1d ConvTranspose1d::make(ParamStore& store, const std::string& name,
                                      std::int64_t in, std::int64_t out, std::int64_t kernel,
                                      std::int64_t stride, bool causal) {
  require(kernel >= stride, ErrorKind::kInvalidArgument, name + ": kernel must be >= stride");
  ConvTranspose1d c;
  const double stddev = 1.0 / std::sqrt(static_cast<double>(in * kernel) / stride);
  c.weight = store.normal(name + ".weight", {in, out, kernel}, stddev);
  c.bias = store.constant(name + ".bias", {out}, 0.0);
  c.stride = stride;
  c.causal = causal;
  return c;
}

Tensor ConvTranspose1d::operator()(const Tensor& x) const {
  const std::int64_t target = x.dim(1) * stride;
  Tensor full = ops::conv_transpose1d(x, weight, bias, stride);
  const std::int64_t extra = full.dim(1) - target;
  const std::int64_t start = causal ? 0 : extra / 2;
  return ops::slice_cols(full, start, target);
}

Linear Linear::make(ParamStore& store, const std::string& name, std::int64_t in,
                    std::int64_t out, bool with_bias, Init init) {
  Linear l;
  if (init == Init::kZero) {
    l.weight = store.constant(name + ".weight", {out, in}, 0.0);
  } else {
    l.weight = store.normal(name + ".weight", {out, in}, 1.0 / std::sqrt(static_cast<double>(in)));
  }
  if (with_bias) l.bias = store.constant(name + ".bias", {out}, 0.0);
  return l;
}

Tensor Linear::operator()(const Tensor& x) const {
  Tensor y = ops::matmul(weight, x);
  return bias.defined() ? ops::add_bias(y, bias) : y;
}

}  // namespace rasc
