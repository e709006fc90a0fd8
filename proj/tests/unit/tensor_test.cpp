#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "rasc/gradcheck.hpp"
#include "rasc/ops.hpp"
#include "rasc/tensor.hpp"

namespace rasc {
namespace {

Tensor param(const std::string& name, Shape shape, std::vector<double> v) {
  return Tensor::parameter(name, std::move(shape), std::move(v), Precision::kF64);
}

TEST(Tensor, BufferMustMatchShape) {
  EXPECT_THROW(Tensor::from({2, 3}, {1, 2, 3}), Error);
  EXPECT_THROW(Tensor::zeros({2, 0}), Error);
  Tensor t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.numel(), 6);
  EXPECT_EQ(t(1, 2), 6.0);
}

TEST(Tensor, RejectsNonFiniteValues) {
  EXPECT_THROW(Tensor::from({1}, {std::numeric_limits<double>::quiet_NaN()}), Error);
  Tensor x = Tensor::from({1}, {0.0});
  try {
    ops::log(x);
    FAIL() << "log(0) should fail";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
    EXPECT_NE(std::string(e.what()).find("log"), std::string::npos);
  }
}

TEST(Tensor, F32StorageRoundsToFloat) {
  Tensor t = Tensor::from({1}, {0.1}, Precision::kF32);
  EXPECT_EQ(t.values()[0], static_cast<double>(0.1f));
  Tensor d = Tensor::from({1}, {0.1}, Precision::kF64);
  EXPECT_EQ(ops::add(t, d).precision(), Precision::kF32);
  EXPECT_EQ(ops::add(d, d).precision(), Precision::kF64);
}

TEST(Backprop, SquareHasGradientSix) {
  Tensor w = param("w", {}, {3.0});
  Tensor f = ops::square(w);
  std::vector<Tensor> ps{w};
  backprop(f, ps);
  EXPECT_DOUBLE_EQ(w.grad()[0], 6.0);
}

TEST(Backprop, ReluSumMatchesCentralDifference) {
  Tensor w = param("w", {4}, {0.7, -1.3, 0.2, 2.1});
  const std::vector<double> xs{1.5, -0.5, 2.0, 0.25};
  Tensor x = Tensor::from({4}, xs);
  auto loss = [&] { return ops::sum(ops::relu(ops::mul(w, x))); };
  std::vector<Tensor> ps{w};
  backprop(loss(), ps);
  const double eps = 1e-3;
  for (int i = 0; i < 4; ++i) {
    std::vector<double> v(w.values().begin(), w.values().end());
    const double orig = v[i];
    v[i] = orig + eps;
    w.assign(v);
    const double up = loss().item();
    v[i] = orig - eps;
    w.assign(v);
    const double down = loss().item();
    v[i] = orig;
    w.assign(v);
    const double numeric = (up - down) / (2 * eps);
    const double analytic = w.grad()[i];
    EXPECT_LE(std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8}), 1e-4)
        << "coordinate " << i;
  }
}

TEST(Backprop, DetachedParameterGetsZeroGradient) {
  Tensor a = param("a", {2}, {1.0, 2.0});
  Tensor b = param("b", {2}, {3.0, 4.0});
  Tensor f = ops::sum(ops::mul(a, b.detach()));
  std::vector<Tensor> ps{a, b};
  backprop(f, ps);
  EXPECT_EQ(b.grad()[0], 0.0);
  EXPECT_EQ(b.grad()[1], 0.0);
  EXPECT_EQ(a.grad()[1], 4.0);
}

TEST(Backprop, RejectsNonScalarOutput) {
  Tensor a = param("a", {2}, {1.0, 2.0});
  std::vector<Tensor> ps{a};
  EXPECT_THROW(backprop(ops::scale(a, 2.0), ps), Error);
}

TEST(Backprop, AccumulatesThroughSharedSubexpressions) {
  Tensor a = param("a", {}, {2.0});
  Tensor s = ops::square(a);
  Tensor f = ops::add(s, ops::mul(s, a));  // a^2 + a^3
  std::vector<Tensor> ps{a};
  backprop(f, ps);
  EXPECT_DOUBLE_EQ(a.grad()[0], 2 * 2.0 + 3 * 4.0);
  backprop(f, ps);
  EXPECT_DOUBLE_EQ(a.grad()[0], 16.0) << "gradients must not accumulate across calls";
}

TEST(NoGrad, GuardStopsRecording) {
  Tensor a = param("a", {}, {2.0});
  {
    NoGradGuard guard;
    EXPECT_FALSE(ops::square(a).requires_grad());
  }
  EXPECT_TRUE(ops::square(a).requires_grad());
}

TEST(Tensor, OpsAreDeterministic) {
  Tensor a = Tensor::from({2, 3}, {0.1, -0.2, 0.3, 0.4, -0.5, 0.6});
  Tensor b = ops::softplus(ops::matmul(a, ops::reshape(a, {3, 2})));
  Tensor c = ops::softplus(ops::matmul(a, ops::reshape(a, {3, 2})));
  ASSERT_EQ(b.numel(), c.numel());
  for (std::int64_t i = 0; i < b.numel(); ++i) EXPECT_EQ(b.values()[i], c.values()[i]);
}

}  // namespace
}  // namespace rasc
