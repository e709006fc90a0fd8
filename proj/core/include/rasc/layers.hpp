#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rasc/ops.hpp"
#include "rasc/tensor.hpp"

namespace rasc {

// Owns every named parameter of a model in creation order.
class ParamStore {
 public:
  ParamStore(Precision precision, std::uint64_t seed) : precision_(precision), rng_(seed) {}

  Tensor add(const std::string& name, Shape shape, std::vector<double> values);
  Tensor normal(const std::string& name, Shape shape, double stddev);
  Tensor uniform(const std::string& name, Shape shape, double lo, double hi);
  Tensor constant(const std::string& name, Shape shape, double value);

  const std::vector<Tensor>& all() const { return params_; }
  const Tensor* find(const std::string& name) const;
  Precision precision() const { return precision_; }
  std::int64_t count() const;

 private:
  Precision precision_;
  std::mt19937_64 rng_;
  std::vector<Tensor> params_;
};

struct Conv1d {
  Tensor weight;  // [out x in x K]
  Tensor bias;    // [out]
  std::int64_t stride = 1;
  std::int64_t dilation = 1;
  bool causal = true;

  enum class Init { kDefault, kZero };

  static Conv1d make(ParamStore& store, const std::string& name, std::int64_t in,
                     std::int64_t out, std::int64_t kernel, std::int64_t stride = 1,
                     std::int64_t dilation = 1, bool causal = true, Init init = Init::kDefault);

  // Output length ceil(T / stride). Causal: output t sees inputs < (t+1)*stride.
  Tensor operator()(const Tensor& x) const;
  std::int64_t kernel() const { return weight.dim(2); }
};

struct ConvTranspose1d {
  Tensor weight;  // [in x out x K]
  Tensor bias;
  std::int64_t stride = 1;
  bool causal = true;

  static ConvTranspose1d make(ParamStore& store, const std::string& name, std::int64_t in,
                              std::int64_t out, std::int64_t kernel, std::int64_t stride,
                              bool causal = true);

  // Upsamples [C x T] to [C' x T*stride].
  Tensor operator()(const Tensor& x) const;
};

// y = W x (+ b) over channels.
struct Linear {
  Tensor weight;  // [out x in]
  Tensor bias;    // optional

  enum class Init { kDefault, kZero };

  static Linear make(ParamStore& store, const std::string& name, std::int64_t in,
                     std::int64_t out, bool with_bias, Init init = Init::kDefault);
  Tensor operator()(const Tensor& x) const;
};

}  // namespace rasc
