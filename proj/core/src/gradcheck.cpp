#include "rasc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace rasc {

GradCheckReport finite_difference_check(const std::function<Tensor()>& loss_fn,
                                        std::span<Tensor> parameters,
                                        const GradCheckOptions& options) {
  require(options.epsilon > 0.0, ErrorKind::kInvalidArgument,
          "finite_difference_check: epsilon must be > 0");
  require(options.stencil == 2 || options.stencil == 4, ErrorKind::kInvalidArgument,
          "finite_difference_check: stencil must be 2 or 4");
  for (const auto& p : parameters) {
    require(p.precision() == Precision::kF64, ErrorKind::kInvalidArgument,
            "finite_difference_check: parameter " + p.name() + " is not f64");
  }
  auto eval = [&]() { NoGradGuard guard; return loss_fn().item(); };

  const double base = eval();
  if (eval() != base) {
    fail(ErrorKind::kInvalidArgument,
         "finite_difference_check: loss function is not deterministic");
  }
  Tensor loss = loss_fn();
  require(loss.item() == base, ErrorKind::kInvalidArgument,
          "finite_difference_check: loss differs between grad and no-grad evaluation");
  std::vector<Tensor> params(parameters.begin(), parameters.end());
  backprop(loss, params);

  GradCheckReport report;
  std::mt19937_64 rng(options.seed);
  for (auto& p : params) {
    std::vector<double> analytic(p.grad().begin(), p.grad().end());
    std::vector<double> values(p.values().begin(), p.values().end());
    std::vector<std::int64_t> coords;
    const std::int64_t n = p.numel();
    if (n <= options.coords_per_parameter) {
      for (std::int64_t i = 0; i < n; ++i) coords.push_back(i);
    } else {
      std::uniform_int_distribution<std::int64_t> pick(0, n - 1);
      while (static_cast<std::int64_t>(coords.size()) < options.coords_per_parameter) {
        auto i = pick(rng);
        if (std::find(coords.begin(), coords.end(), i) == coords.end()) coords.push_back(i);
      }
    }
    for (auto i : coords) {
      const double orig = values[i];
      auto at = [&](double offset) {
        values[i] = orig + offset;
        p.assign(values);
        return eval();
      };
      const double h = options.epsilon;
      double numeric = (at(h) - at(-h)) / (2.0 * h);
      if (options.stencil == 4) {
        numeric = (4.0 * numeric - (at(2 * h) - at(-2 * h)) / (4.0 * h)) / 3.0;
      }
      values[i] = orig;
      p.assign(values);
      const double a = analytic[i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      const double err = std::fabs(a - numeric) / denom;
      ++report.coordinates;
      if (err > report.max_relative_error || report.worst_index < 0) {
        report.max_relative_error = std::max(report.max_relative_error, err);
        if (err >= report.max_relative_error) {
          report.worst_parameter = p.name();
          report.worst_index = i;
          report.worst_analytic = a;
          report.worst_numeric = numeric;
        }
      }
    }
    // Leave the analytic gradient in place for callers.
    auto g = p.mutable_grad();
    std::copy(analytic.begin(), analytic.end(), g.begin());
  }
  return report;
}

}  // namespace rasc
