#include "rasc/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <numbers>

namespace rasc::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConstMat = Eigen::Map<const RowMat>;

MapConstMat as_mat(std::span<const double> data, std::int64_t rows, std::int64_t cols) {
  return MapConstMat(data.data(), rows, cols);
}

void require_rank(const Tensor& x, int rank, const char* op) {
  require(x.defined(), ErrorKind::kInvalidArgument, std::string(op) + ": undefined input");
  require(x.rank() == rank, ErrorKind::kShape,
          std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
              shape_str(x.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(), ErrorKind::kShape,
          std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
              shape_str(b.shape()));
}

// y = f(x), dy/dx = df(x, y).
template <typename F, typename DF>
Tensor unary(const char* op, const Tensor& x, F f, DF df) {
  std::vector<double> out(x.numel());
  auto in = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result(op, x.shape(), std::move(out), {x},
                     [df](const BackwardContext& ctx) {
                       double* gx = ctx.input_grad(0);
                       if (!gx) return;
                       auto g = ctx.grad();
                       auto xv = ctx.input(0);
                       auto yv = ctx.output();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         gx[i] += g[i] * df(xv[i], yv[i]);
                       }
                     });
}

double stable_softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double round_half_away(double v) { return std::round(v); }

std::int64_t conv1d_output_length(std::int64_t length, std::int64_t kernel,
                                  const ConvOptions& options) {
  const std::int64_t span = options.dilation * (kernel - 1) + 1;
  const std::int64_t padded = length + options.pad.total();
  if (padded < span) return 0;
  return (padded - span) / options.stride + 1;
}

Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              const ConvOptions& options) {
  require_rank(input, 2, "conv1d");
  require_rank(kernel, 3, "conv1d");
  require(options.stride >= 1 && options.dilation >= 1, ErrorKind::kInvalidArgument,
          "conv1d: stride and dilation must be >= 1");
  require(options.pad.left >= 0 && options.pad.right >= 0, ErrorKind::kInvalidArgument,
          "conv1d: negative padding");
  const std::int64_t cin = input.dim(0), t_in = input.dim(1);
  const std::int64_t cout = kernel.dim(0), k = kernel.dim(2);
  require(kernel.dim(1) == cin, ErrorKind::kShape,
          "conv1d: input has " + std::to_string(cin) + " channels but kernel " +
              shape_str(kernel.shape()) + " expects " + std::to_string(kernel.dim(1)));
  if (bias.defined()) {
    require(bias.rank() == 1 && bias.dim(0) == cout, ErrorKind::kShape,
            "conv1d: bias " + shape_str(bias.shape()) + " for " + std::to_string(cout) +
                " output channels");
  }
  const std::int64_t t_out = conv1d_output_length(t_in, k, options);
  require(t_out >= 1, ErrorKind::kShape,
          "conv1d: input length " + std::to_string(t_in) + " too short for kernel " +
              std::to_string(k));

  const std::int64_t s = options.stride, d = options.dilation, pl = options.pad.left;
  // im2col: col[(ci*K + kk), t] = x[ci, t*s + kk*d - pl] (zero outside).
  auto col = std::make_shared<std::vector<double>>(cin * k * t_out, 0.0);
  auto x = input.values();
  for (std::int64_t ci = 0; ci < cin; ++ci) {
    for (std::int64_t kk = 0; kk < k; ++kk) {
      double* row = col->data() + (ci * k + kk) * t_out;
      const double* xr = x.data() + ci * t_in;
      for (std::int64_t t = 0; t < t_out; ++t) {
        const std::int64_t src = t * s + kk * d - pl;
        if (src >= 0 && src < t_in) row[t] = xr[src];
      }
    }
  }
  std::vector<double> out(cout * t_out);
  MapMat out_m(out.data(), cout, t_out);
  out_m.noalias() = as_mat(kernel.values(), cout, cin * k) *
                    as_mat(*col, cin * k, t_out);
  if (bias.defined()) {
    auto b = bias.values();
    for (std::int64_t co = 0; co < cout; ++co) out_m.row(co).array() += b[co];
  }
  std::vector<Tensor> inputs = {input, kernel};
  if (bias.defined()) inputs.push_back(bias);
  const bool has_bias = bias.defined();
  return make_result(
      "conv1d", {cout, t_out}, std::move(out), std::move(inputs),
      [=](const BackwardContext& ctx) {
        auto g = as_mat(ctx.grad(), cout, t_out);
        if (double* gw = ctx.input_grad(1)) {
          MapMat(gw, cout, cin * k).noalias() += g * as_mat(*col, cin * k, t_out).transpose();
        }
        if (has_bias) {
          if (double* gb = ctx.input_grad(2)) {
            for (std::int64_t co = 0; co < cout; ++co) gb[co] += g.row(co).sum();
          }
        }
        if (double* gx = ctx.input_grad(0)) {
          RowMat gcol = as_mat(ctx.input(1), cout, cin * k).transpose() * g;
          for (std::int64_t ci = 0; ci < cin; ++ci) {
            for (std::int64_t kk = 0; kk < k; ++kk) {
              const double* row = gcol.data() + (ci * k + kk) * t_out;
              double* xr = gx + ci * t_in;
              for (std::int64_t t = 0; t < t_out; ++t) {
                const std::int64_t src = t * s + kk * d - pl;
                if (src >= 0 && src < t_in) xr[src] += row[t];
              }
            }
          }
        }
      });
}

Tensor conv_transpose1d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                        std::int64_t stride) {
  require_rank(input, 2, "conv_transpose1d");
  require_rank(kernel, 3, "conv_transpose1d");
  require(stride >= 1, ErrorKind::kInvalidArgument, "conv_transpose1d: stride must be >= 1");
  const std::int64_t cin = input.dim(0), t_in = input.dim(1);
  const std::int64_t cout = kernel.dim(1), k = kernel.dim(2);
  require(kernel.dim(0) == cin, ErrorKind::kShape,
          "conv_transpose1d: input has " + std::to_string(cin) + " channels but kernel " +
              shape_str(kernel.shape()) + " expects " + std::to_string(kernel.dim(0)));
  if (bias.defined()) {
    require(bias.rank() == 1 && bias.dim(0) == cout, ErrorKind::kShape,
            "conv_transpose1d: bias shape " + shape_str(bias.shape()));
  }
  const std::int64_t t_out = (t_in - 1) * stride + k;
  // cols[(co*K + kk), t] = sum_ci W[ci, co, kk] x[ci, t]
  RowMat cols = as_mat(kernel.values(), cin, cout * k).transpose() *
                as_mat(input.values(), cin, t_in);
  std::vector<double> out(cout * t_out, 0.0);
  for (std::int64_t co = 0; co < cout; ++co) {
    for (std::int64_t kk = 0; kk < k; ++kk) {
      const double* row = cols.data() + (co * k + kk) * t_in;
      double* orow = out.data() + co * t_out;
      for (std::int64_t t = 0; t < t_in; ++t) orow[t * stride + kk] += row[t];
    }
  }
  if (bias.defined()) {
    auto b = bias.values();
    for (std::int64_t co = 0; co < cout; ++co) {
      for (std::int64_t t = 0; t < t_out; ++t) out[co * t_out + t] += b[co];
    }
  }
  std::vector<Tensor> inputs = {input, kernel};
  if (bias.defined()) inputs.push_back(bias);
  const bool has_bias = bias.defined();
  return make_result(
      "conv_transpose1d", {cout, t_out}, std::move(out), std::move(inputs),
      [=](const BackwardContext& ctx) {
        auto g = ctx.grad();
        RowMat gcols(cout * k, t_in);
        for (std::int64_t co = 0; co < cout; ++co) {
          for (std::int64_t kk = 0; kk < k; ++kk) {
            double* row = gcols.data() + (co * k + kk) * t_in;
            const double* grow = g.data() + co * t_out;
            for (std::int64_t t = 0; t < t_in; ++t) row[t] = grow[t * stride + kk];
          }
        }
        if (double* gw = ctx.input_grad(1)) {
          MapMat(gw, cin, cout * k).noalias() +=
              as_mat(ctx.input(0), cin, t_in) * gcols.transpose();
        }
        if (double* gx = ctx.input_grad(0)) {
          MapMat(gx, cin, t_in).noalias() += as_mat(ctx.input(1), cin, cout * k) * gcols;
        }
        if (has_bias) {
          if (double* gb = ctx.input_grad(2)) {
            for (std::int64_t co = 0; co < cout; ++co) {
              for (std::int64_t t = 0; t < t_out; ++t) gb[co] += g[co * t_out + t];
            }
          }
        }
      });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::int64_t m = a.dim(0), kd = a.dim(1), n = b.dim(1);
  require(b.dim(0) == kd, ErrorKind::kShape,
          "matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  std::vector<double> out(m * n);
  MapMat(out.data(), m, n).noalias() = as_mat(a.values(), m, kd) * as_mat(b.values(), kd, n);
  return make_result("matmul", {m, n}, std::move(out), {a, b},
                     [=](const BackwardContext& ctx) {
                       auto g = as_mat(ctx.grad(), m, n);
                       if (double* ga = ctx.input_grad(0)) {
                         MapMat(ga, m, kd).noalias() +=
                             g * as_mat(ctx.input(1), kd, n).transpose();
                       }
                       if (double* gb = ctx.input_grad(1)) {
                         MapMat(gb, kd, n).noalias() +=
                             as_mat(ctx.input(0), m, kd).transpose() * g;
                       }
                     });
}

namespace {

template <typename F, typename DA, typename DB>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, F f, DA da, DB db) {
  require_same_shape(a, b, op);
  std::vector<double> out(a.numel());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
  return make_result(op, a.shape(), std::move(out), {a, b},
                     [da, db](const BackwardContext& ctx) {
                       auto g = ctx.grad();
                       auto av = ctx.input(0), bv = ctx.input(1);
                       if (double* ga = ctx.input_grad(0)) {
                         for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * da(av[i], bv[i]);
                       }
                       if (double* gb = ctx.input_grad(1)) {
                         for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * db(av[i], bv[i]);
                       }
                     });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(
      "add_scalar", a, [offset](double x) { return x + offset; },
      [](double, double) { return 1.0; });
}

namespace {

// x [C x T] with v [C]; mode 0 adds, mode 1 multiplies.
Tensor channel_broadcast(const char* op, const Tensor& x, const Tensor& v, bool multiply) {
  require_rank(x, 2, op);
  require(v.rank() == 1 && v.dim(0) == x.dim(0), ErrorKind::kShape,
          std::string(op) + ": per-channel vector " + shape_str(v.shape()) + " for " +
              shape_str(x.shape()));
  const std::int64_t c = x.dim(0), t = x.dim(1);
  std::vector<double> out(c * t);
  auto xv = x.values(), vv = v.values();
  for (std::int64_t i = 0; i < c; ++i) {
    for (std::int64_t j = 0; j < t; ++j) {
      out[i * t + j] = multiply ? xv[i * t + j] * vv[i] : xv[i * t + j] + vv[i];
    }
  }
  return make_result(op, x.shape(), std::move(out), {x, v},
                     [=](const BackwardContext& ctx) {
                       auto g = ctx.grad();
                       auto xv = ctx.input(0), vv = ctx.input(1);
                       if (double* gx = ctx.input_grad(0)) {
                         for (std::int64_t i = 0; i < c; ++i) {
                           const double f = multiply ? vv[i] : 1.0;
                           for (std::int64_t j = 0; j < t; ++j) gx[i * t + j] += g[i * t + j] * f;
                         }
                       }
                       if (double* gv = ctx.input_grad(1)) {
                         for (std::int64_t i = 0; i < c; ++i) {
                           double acc = 0.0;
                           for (std::int64_t j = 0; j < t; ++j) {
                             acc += multiply ? g[i * t + j] * xv[i * t + j] : g[i * t + j];
                           }
                           gv[i] += acc;
                         }
                       }
                     });
}

}  // namespace

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  return channel_broadcast("add_bias", x, bias, false);
}

Tensor mul_channel(const Tensor& x, const Tensor& factors) {
  return channel_broadcast("mul_channel", x, factors, true);
}

Tensor elu(const Tensor& x) {
  return unary(
      "elu", x, [](double v) { return v > 0 ? v : std::expm1(v); },
      [](double v, double y) { return v > 0 ? 1.0 : y + 1.0; });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](double v) { return v > 0 ? v : 0.0; },
      [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary("sigmoid", x, stable_sigmoid,
               [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& x) {
  return unary(
      "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary(
      "log", x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor softplus(const Tensor& x) {
  return unary("softplus", x, stable_softplus,
               [](double v, double) { return stable_sigmoid(v); });
}

Tensor abs(const Tensor& x) {
  return unary(
      "abs", x, [](double v) { return std::fabs(v); },
      [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

Tensor square(const Tensor& x) {
  return unary(
      "square", x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor normal_cdf(const Tensor& x) {
  return unary(
      "normal_cdf", x,
      [](double v) { return 0.5 * std::erfc(-v * std::numbers::sqrt2 / 2.0); },
      [](double v, double) {
        return std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
      });
}

Tensor lower_bound(const Tensor& x, double floor) {
  return unary(
      "lower_bound", x, [floor](double v) { return v < floor ? floor : v; },
      [floor](double v, double) { return v >= floor ? 1.0 : 0.0; });
}

Tensor round_ste(const Tensor& x) {
  return unary("round_ste", x, round_half_away, [](double, double) { return 1.0; });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  return make_result("sum", {}, {acc}, {x}, [](const BackwardContext& ctx) {
    double* gx = ctx.input_grad(0);
    if (!gx) return;
    const double g = ctx.grad()[0];
    const std::size_t n = ctx.input(0).size();
    for (std::size_t i = 0; i < n; ++i) gx[i] += g;
  });
}

Tensor mean(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  const double n = static_cast<double>(x.numel());
  return make_result("mean", {}, {acc / n}, {x}, [n](const BackwardContext& ctx) {
    double* gx = ctx.input_grad(0);
    if (!gx) return;
    const double g = ctx.grad()[0] / n;
    const std::size_t count = ctx.input(0).size();
    for (std::size_t i = 0; i < count; ++i) gx[i] += g;
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  require(numel(shape) == x.numel(), ErrorKind::kShape,
          "reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  std::vector<double> out(x.values().begin(), x.values().end());
  return make_result("reshape", std::move(shape), std::move(out), {x},
                     [](const BackwardContext& ctx) {
                       double* gx = ctx.input_grad(0);
                       if (!gx) return;
                       auto g = ctx.grad();
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                     });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  require(!parts.empty(), ErrorKind::kInvalidArgument, "concat_rows: no inputs");
  const std::int64_t t = parts[0].dim(1);
  std::int64_t rows = 0;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_rows");
    require(p.dim(1) == t, ErrorKind::kShape,
            "concat_rows: time length mismatch " + shape_str(p.shape()) + " vs " +
                shape_str(parts[0].shape()));
    rows += p.dim(0);
  }
  std::vector<double> out;
  out.reserve(rows * t);
  std::vector<std::int64_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(static_cast<std::int64_t>(out.size()));
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  return make_result("concat_rows", {rows, t}, std::move(out), parts,
                     [offsets](const BackwardContext& ctx) {
                       auto g = ctx.grad();
                       for (std::size_t i = 0; i < offsets.size(); ++i) {
                         double* gp = ctx.input_grad(i);
                         if (!gp) continue;
                         const std::size_t n = ctx.input(i).size();
                         for (std::size_t j = 0; j < n; ++j) gp[j] += g[offsets[i] + j];
                       }
                     });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  require(!parts.empty(), ErrorKind::kInvalidArgument, "concat_cols: no inputs");
  const std::int64_t c = parts[0].dim(0);
  std::int64_t cols = 0;
  std::vector<std::int64_t> offsets, widths;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_cols");
    require(p.dim(0) == c, ErrorKind::kShape,
            "concat_cols: channel mismatch " + shape_str(p.shape()) + " vs " +
                shape_str(parts[0].shape()));
    offsets.push_back(cols);
    widths.push_back(p.dim(1));
    cols += p.dim(1);
  }
  std::vector<double> out(c * cols);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    auto v = parts[i].values();
    for (std::int64_t r = 0; r < c; ++r) {
      for (std::int64_t j = 0; j < widths[i]; ++j) {
        out[r * cols + offsets[i] + j] = v[r * widths[i] + j];
      }
    }
  }
  return make_result("concat_cols", {c, cols}, std::move(out), parts,
                     [=](const BackwardContext& ctx) {
                       auto g = ctx.grad();
                       for (std::size_t i = 0; i < offsets.size(); ++i) {
                         double* gp = ctx.input_grad(i);
                         if (!gp) continue;
                         for (std::int64_t r = 0; r < c; ++r) {
                           for (std::int64_t j = 0; j < widths[i]; ++j) {
                             gp[r * widths[i] + j] += g[r * cols + offsets[i] + j];
                           }
                         }
                       }
                     });
}

Tensor slice_rows(const Tensor& x, std::int64_t start, std::int64_t count) {
  require_rank(x, 2, "slice_rows");
  require(start >= 0 && count >= 1 && start + count <= x.dim(0), ErrorKind::kShape,
          "slice_rows: [" + std::to_string(start) + ", +" + std::to_string(count) +
              ") out of " + shape_str(x.shape()));
  const std::int64_t t = x.dim(1);
  auto v = x.values();
  std::vector<double> out(v.begin() + start * t, v.begin() + (start + count) * t);
  return make_result("slice_rows", {count, t}, std::move(out), {x},
                     [=](const BackwardContext& ctx) {
                       double* gx = ctx.input_grad(0);
                       if (!gx) return;
                       auto g = ctx.grad();
                       for (std::size_t i = 0; i < g.size(); ++i) gx[start * t + i] += g[i];
                     });
}

Tensor slice_cols(const Tensor& x, std::int64_t start, std::int64_t count) {
  require_rank(x, 2, "slice_cols");
  require(start >= 0 && count >= 1 && start + count <= x.dim(1), ErrorKind::kShape,
          "slice_cols: [" + std::to_string(start) + ", +" + std::to_string(count) +
              ") out of " + shape_str(x.shape()));
  const std::int64_t c = x.dim(0), t = x.dim(1);
  auto v = x.values();
  std::vector<double> out(c * count);
  for (std::int64_t r = 0; r < c; ++r) {
    for (std::int64_t j = 0; j < count; ++j) out[r * count + j] = v[r * t + start + j];
  }
  return make_result("slice_cols", {c, count}, std::move(out), {x},
                     [=](const BackwardContext& ctx) {
                       double* gx = ctx.input_grad(0);
                       if (!gx) return;
                       auto g = ctx.grad();
                       for (std::int64_t r = 0; r < c; ++r) {
                         for (std::int64_t j = 0; j < count; ++j) {
                           gx[r * t + start + j] += g[r * count + j];
                         }
                       }
                     });
}

Tensor pad_cols(const Tensor& x, std::int64_t left, std::int64_t right) {
  require_rank(x, 2, "pad_cols");
  require(left >= 0 && right >= 0, ErrorKind::kInvalidArgument, "pad_cols: negative padding");
  if (left == 0 && right == 0) return x;
  const std::int64_t c = x.dim(0), t = x.dim(1), width = t + left + right;
  auto v = x.values();
  std::vector<double> out(c * width, 0.0);
  for (std::int64_t r = 0; r < c; ++r) {
    for (std::int64_t j = 0; j < t; ++j) out[r * width + left + j] = v[r * t + j];
  }
  return make_result("pad_cols", {c, width}, std::move(out), {x},
                     [=](const BackwardContext& ctx) {
                       double* gx = ctx.input_grad(0);
                       if (!gx) return;
                       auto g = ctx.grad();
                       for (std::int64_t r = 0; r < c; ++r) {
                         for (std::int64_t j = 0; j < t; ++j) gx[r * t + j] += g[r * width + left + j];
                       }
                     });
}

}  // namespace rasc::ops
