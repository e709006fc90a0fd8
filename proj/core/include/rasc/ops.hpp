#pragma once

#include <cstdint>
#include <vector>

#include "rasc/tensor.hpp"

// The closed set of differentiable ops the codec is built from. Two-dimensional
// tensors are laid out channels x time, row-major.
namespace rasc::ops {

struct PadSpec {
  std::int64_t left = 0;
  std::int64_t right = 0;

  std::int64_t total() const { return left + right; }
  // All padding on the left so output t never sees input > t*stride.
  static PadSpec causal(std::int64_t kernel, std::int64_t dilation = 1) {
    return {dilation * (kernel - 1), 0};
  }
};

struct ConvOptions {
  std::int64_t stride = 1;
  std::int64_t dilation = 1;
  PadSpec pad;
};

std::int64_t conv1d_output_length(std::int64_t length, std::int64_t kernel,
                                  const ConvOptions& options);

// input [C_in x T], kernel [C_out x C_in x K], optional bias [C_out].
Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              const ConvOptions& options);

// input [C_in x T], kernel [C_in x C_out x K] -> [C_out x ((T-1)*stride + K)].
Tensor conv_transpose1d(const Tensor& input, const Tensor& kernel,
                        const Tensor& bias, std::int64_t stride);

Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);

// Per-channel broadcasts over x [C x T] with v [C].
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor mul_channel(const Tensor& x, const Tensor& factors);

Tensor elu(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor square(const Tensor& x);
// Standard normal CDF.
Tensor normal_cdf(const Tensor& x);

// max(x, floor); the gradient passes where x >= floor.
Tensor lower_bound(const Tensor& x, double floor);
// Round half away from zero with an identity (straight-through) gradient.
Tensor round_ste(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);
// Concatenation of 2-D tensors along rows (channels) or columns (time).
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& x, std::int64_t start, std::int64_t count);
Tensor slice_cols(const Tensor& x, std::int64_t start, std::int64_t count);
// Zero padding along time.
Tensor pad_cols(const Tensor& x, std::int64_t left, std::int64_t right);

double round_half_away(double v);

}  // namespace rasc::ops
