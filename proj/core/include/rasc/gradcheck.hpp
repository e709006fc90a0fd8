#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "rasc/tensor.hpp"

namespace rasc {

struct GradCheckOptions {
  double epsilon = 1e-6;
  // Coordinates sampled per parameter; tensors at or below this size are
  // checked exhaustively.
  std::int64_t coords_per_parameter = 8;
  std::uint64_t seed = 0x5eed;
  // 2: central difference, 4: fourth-order five-point stencil.
  int stencil = 2;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::int64_t coordinates = 0;
  std::string worst_parameter;
  std::int64_t worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Compares backprop gradients of `loss_fn` against finite differences.
// Relative error per coordinate is |a - n| / max(|a|, |n|, 1e-8). Parameters
// must be f64 leaves. Throws when `loss_fn` is not deterministic.
GradCheckReport finite_difference_check(const std::function<Tensor()>& loss_fn,
                                        std::span<Tensor> parameters,
                                        const GradCheckOptions& options = {});

}  // namespace rasc
