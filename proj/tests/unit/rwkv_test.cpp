#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rasc/gradcheck.hpp"
#include "rasc/ops.hpp"
#include "rasc/rwkv.hpp"
#include "oracles.hpp"
#include "signals.hpp"

namespace rasc {
namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

std::vector<double> positives(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.05, 2.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

void randomize(const ParamStore& store, std::uint64_t seed, double scale = 0.3) {
  for (auto p : store.all()) p.assign(normals(p.numel(), seed++, scale));
}

TEST(Wkv, MatchesBruteForce) {
  const int c = 4, t = 16;
  auto k = normals(c * t, 1), v = normals(c * t, 2), w = positives(c, 3), u = normals(c, 4);
  Tensor out = wkv(Tensor::from({c, t}, k), Tensor::from({c, t}, v), Tensor::from({c}, w),
                   Tensor::from({c}, u));
  auto expected = testing::brute_force_wkv(k, v, w, u, c, t);
  for (int i = 0; i < c * t; ++i) EXPECT_NEAR(out.values()[i], expected[i], 1e-6);
}

TEST(Wkv, LargeKeysStayFinite) {
  const int c = 2, t = 40;
  auto k = normals(c * t, 5, 200.0), v = normals(c * t, 6);
  auto w = positives(c, 7), u = normals(c, 8);
  Tensor out = wkv(Tensor::from({c, t}, k), Tensor::from({c, t}, v), Tensor::from({c}, w),
                   Tensor::from({c}, u));
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, std::abs(x));
  for (double x : out.values()) EXPECT_LE(std::abs(x), vmax + 1e-9);
}

TEST(Wkv, SingleStepReturnsValue) {
  Tensor out = wkv(Tensor::from({2, 1}, {0.3, -2.0}), Tensor::from({2, 1}, {5.0, -7.0}),
                   Tensor::from({2}, {1.0, 1.0}), Tensor::from({2}, {0.5, -0.5}));
  EXPECT_DOUBLE_EQ(out.values()[0], 5.0);
  EXPECT_DOUBLE_EQ(out.values()[1], -7.0);
}

TEST(Wkv, ZeroDecayGivesRunningMean) {
  Tensor out = wkv(Tensor::zeros({1, 3}), Tensor::from({1, 3}, {1, 2, 3}), Tensor::zeros({1}),
                   Tensor::zeros({1}));
  EXPECT_NEAR(out.values()[0], 1.0, 1e-12);
  EXPECT_NEAR(out.values()[1], 1.5, 1e-12);
  EXPECT_NEAR(out.values()[2], 2.0, 1e-12);
}

TEST(Wkv, ConstantPerStepDecayMatchesStatic) {
  const int c = 3, t = 10;
  auto k = normals(c * t, 9), v = normals(c * t, 10), w = positives(c, 11), u = normals(c, 12);
  std::vector<double> wt(c * t);
  for (int i = 0; i < c; ++i) std::fill_n(wt.begin() + i * t, t, w[i]);
  Tensor a = wkv(Tensor::from({c, t}, k), Tensor::from({c, t}, v), Tensor::from({c}, w),
                 Tensor::from({c}, u));
  Tensor b = wkv(Tensor::from({c, t}, k), Tensor::from({c, t}, v), Tensor::from({c, t}, wt),
                 Tensor::from({c}, u));
  for (int i = 0; i < c * t; ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-12);
}

TEST(Wkv, ChunkedMatchesFullSequence) {
  const int c = 3, t = 20;
  auto k = normals(c * t, 13), v = normals(c * t, 14), w = positives(c, 15), u = normals(c, 16);
  Tensor kt = Tensor::from({c, t}, k), vt = Tensor::from({c, t}, v);
  Tensor wt = Tensor::from({c}, w), ut = Tensor::from({c}, u);
  Tensor full = wkv(kt, vt, wt, ut);
  WkvState state;
  int start = 0;
  for (int len : {1, 7, 5, 7}) {
    Tensor part = wkv(ops::slice_cols(kt, start, len), ops::slice_cols(vt, start, len), wt, ut,
                      &state);
    for (int ch = 0; ch < c; ++ch) {
      for (int j = 0; j < len; ++j) EXPECT_NEAR(part(ch, j), full(ch, start + j), 1e-12);
    }
    start += len;
  }
}

TEST(Wkv, Gradient) {
  const int c = 3, t = 6;
  Tensor k = Tensor::parameter("k", {c, t}, normals(c * t, 17), Precision::kF64);
  Tensor v = Tensor::parameter("v", {c, t}, normals(c * t, 18), Precision::kF64);
  Tensor w = Tensor::parameter("w", {c}, positives(c, 19), Precision::kF64);
  Tensor wt = Tensor::parameter("wt", {c, t}, positives(c * t, 20), Precision::kF64);
  Tensor u = Tensor::parameter("u", {c}, normals(c, 21), Precision::kF64);
  Tensor probe = Tensor::from({c, t}, normals(c * t, 22));
  std::vector<Tensor> ps{k, v, w, wt, u};
  GradCheckOptions o;
  o.coords_per_parameter = c * t;
  auto loss = [&] {
    return ops::add(ops::sum(ops::mul(wkv(k, v, w, u), probe)),
                    ops::sum(ops::mul(wkv(k, v, wt, u), probe)));
  };
  EXPECT_LT(finite_difference_check(loss, ps, o).max_relative_error, 1e-5);
}

TEST(Wkv, GradientWithCarriedState) {
  const int c = 2, t = 5;
  Tensor k = Tensor::parameter("k", {c, t}, normals(c * t, 23), Precision::kF64);
  Tensor v = Tensor::parameter("v", {c, t}, normals(c * t, 24), Precision::kF64);
  Tensor w = Tensor::parameter("w", {c}, positives(c, 25), Precision::kF64);
  Tensor u = Tensor::parameter("u", {c}, normals(c, 26), Precision::kF64);
  WkvState seed;
  {
    NoGradGuard guard;
    wkv(Tensor::from({c, 4}, normals(c * 4, 27)), Tensor::from({c, 4}, normals(c * 4, 28)),
        Tensor::from({c}, {0.5, 0.5}), Tensor::from({c}, {0.0, 0.0}), &seed);
  }
  std::vector<Tensor> ps{k, v, w, u};
  auto loss = [&] {
    WkvState s = seed;
    return ops::sum(ops::square(wkv(k, v, w, u, &s)));
  };
  GradCheckOptions o;
  o.coords_per_parameter = c * t;
  EXPECT_LT(finite_difference_check(loss, ps, o).max_relative_error, 1e-5);
}

TEST(Wkv, RejectsBadShapes) {
  EXPECT_THROW(wkv(Tensor::zeros({2, 3}), Tensor::zeros({2, 4}), Tensor::zeros({2}),
                   Tensor::zeros({2})),
               Error);
  EXPECT_THROW(wkv(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}), Tensor::zeros({3}),
                   Tensor::zeros({2})),
               Error);
}

TEST(RwkvBlock, IdentityAtInit) {
  ParamStore store(Precision::kF64, 1);
  RwkvBlock block(store, "b", 6, {});
  Tensor x = Tensor::from({6, 9}, normals(54, 30));
  Tensor y = block(x);
  for (int i = 0; i < 54; ++i) EXPECT_EQ(y.values()[i], x.values()[i]);
}

TEST(RwkvBlock, IsCausal) {
  for (bool dd : {false, true}) {
    ParamStore store(Precision::kF64, 2);
    RwkvConfig cfg;
    cfg.data_dependent_decay = dd;
    cfg.decay_rank = 2;
    RwkvBlock block(store, "b", 4, cfg);
    randomize(store, 40);
    auto base = normals(4 * 12, 31);
    Tensor y0 = block(Tensor::from({4, 12}, base));
    auto bumped = base;
    for (int ch = 0; ch < 4; ++ch) bumped[ch * 12 + 7] += 1.0;
    Tensor y1 = block(Tensor::from({4, 12}, bumped));
    for (int ch = 0; ch < 4; ++ch) {
      for (int t = 0; t < 7; ++t) EXPECT_EQ(y0(ch, t), y1(ch, t));
      EXPECT_NE(y0(ch, 7), y1(ch, 7));
    }
  }
}

TEST(RwkvBlock, StreamingMatchesFullSequence) {
  for (bool dd : {false, true}) {
    ParamStore store(Precision::kF64, 3);
    RwkvConfig cfg;
    cfg.data_dependent_decay = dd;
    cfg.decay_rank = 2;
    RwkvBlock block(store, "b", 4, cfg);
    randomize(store, 50);
    Tensor x = Tensor::from({4, 15}, normals(60, 32));
    Tensor full = block(x);
    RwkvState state;
    int start = 0;
    for (int len : {4, 1, 10}) {
      Tensor part = block(ops::slice_cols(x, start, len), &state);
      for (int ch = 0; ch < 4; ++ch) {
        for (int j = 0; j < len; ++j) EXPECT_NEAR(part(ch, j), full(ch, start + j), 1e-12);
      }
      start += len;
    }
  }
}

TEST(RwkvBlock, Gradient) {
  for (bool dd : {false, true}) {
    ParamStore store(Precision::kF64, 4);
    RwkvConfig cfg;
    cfg.data_dependent_decay = dd;
    cfg.decay_rank = 2;
    RwkvBlock block(store, "b", 4, cfg);
    randomize(store, 60);
    Tensor x = Tensor::parameter("x", {4, 6}, normals(24, 33), Precision::kF64);
    std::vector<Tensor> ps = store.all();
    ps.push_back(x);
    auto loss = [&] { return ops::sum(ops::square(block(x))); };
    auto r = finite_difference_check(loss, ps);
    EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_parameter;
  }
}

}  // namespace
}  // namespace rasc
