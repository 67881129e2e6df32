#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "gforge/error.h"
#include "gforge/nn/ops.h"
#include "gradcheck.h"
#include "oracles.h"

namespace gforge::nn {
namespace {

using gforge::testing::check_gradients;
using gforge::testing::random_tensor;
using gforge::testing::scalar_conv;
using gforge::testing::scalar_partial_conv;

constexpr double kOpGradTolerance = 1e-6;

Tensor<double> random_mask(const Shape& shape, std::uint64_t seed, double p_valid) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(p_valid);
  Tensor<double> m(shape);
  for (double& v : m.values()) v = b(rng) ? 1.0 : 0.0;
  return m;
}

Parameter<double> param(const std::string& name, Tensor<double> v) {
  Parameter<double> p;
  p.name = name;
  p.value = std::move(v);
  return p;
}

// Scalar probe: masked L1 against a target offset from the base output by
// random signed amounts in [0.5, 1), so no |.| kink sits near the base point.
using Build = std::function<Var<double>(Tape<double>&)>;

gforge::testing::GradCheckReport check_op(const std::vector<Parameter<double>*>& params, const Build& build,
                                          std::uint64_t seed = 0) {
  Tensor<double> base;
  {
    Tape<double> tape;
    base = tape.value(build(tape));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(0.5, 1.0);
  std::bernoulli_distribution sign(0.5);
  Tensor<double> target = base;
  for (double& v : target.values()) v += sign(rng) ? mag(rng) : -mag(rng);
  const Tensor<double> ones(base.shape(), 1.0);
  return check_gradients(params, [&](Tape<double>& tape) { return masked_l1_mean(tape, build(tape), target, ones); });
}

struct ConvCase {
  int n, h, w, ci, co, k, stride, pad;
  bool same;
};

std::vector<ConvCase> random_conv_cases(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  std::vector<ConvCase> cases;
  for (int i = 0; i < count; ++i) {
    ConvCase c;
    c.n = pick(1, 2);
    c.h = pick(3, 12);
    c.w = pick(3, 12);
    c.ci = pick(1, 4);
    c.co = pick(1, 4);
    c.k = pick(1, 4);
    c.stride = pick(1, 2);
    c.same = pick(0, 1) == 1;
    c.pad = pick(0, c.k / 2);
    if (c.h < c.k) c.h = c.k;
    if (c.w < c.k) c.w = c.k;
    cases.push_back(c);
  }
  return cases;
}

ConvGeometry geometry_of(const ConvCase& c) {
  return c.same ? conv_geometry_same(c.h, c.w, c.k, c.stride) : conv_geometry(c.h, c.w, c.k, c.stride, c.pad);
}

TEST(ConvGeometry, OutputSizes) {
  const ConvGeometry a = conv_geometry(64, 64, 3, 2, 1);
  EXPECT_EQ(a.out_h, 32);
  const ConvGeometry s = conv_geometry_same(5, 7, 4, 2);
  EXPECT_EQ(s.out_h, 3);
  EXPECT_EQ(s.out_w, 4);
  const ConvGeometry t = transposed_geometry(4, 4, 4, 2, 1);
  EXPECT_EQ(t.in_h, 8);
  EXPECT_EQ(t.out_h, 4);
}

TEST(Conv2d, MatchesScalarReference) {
  std::uint64_t seed = 10;
  for (const ConvCase& c : random_conv_cases(40, 1)) {
    const ConvGeometry g = geometry_of(c);
    const Tensor<double> x = random_tensor({c.n, c.h, c.w, c.ci}, ++seed);
    const Tensor<double> w = random_tensor({c.k, c.k, c.ci, c.co}, ++seed);
    const Tensor<double> b = random_tensor({c.co}, ++seed);
    Tensor<double> y;
    conv2d_forward<double>(x, w, &b, g, y);
    const Tensor<double> ref = scalar_conv(x, w, &b, g);
    ASSERT_EQ(y.shape(), ref.shape());
    for (std::size_t i = 0; i < y.size(); ++i) ASSERT_NEAR(y[i], ref[i], 1e-12);
  }
}

TEST(Conv2d, IdentityKernelIsIdentity) {
  const Tensor<double> x = random_tensor({2, 5, 4, 3}, 2);
  Tensor<double> w({1, 1, 3, 3}, 0.0);
  for (int c = 0; c < 3; ++c) w[c * 3 + c] = 1.0;
  Tensor<double> y;
  conv2d_forward<double>(x, w, nullptr, conv_geometry(5, 4, 1, 1, 0), y);
  EXPECT_EQ(y, x);
}

TEST(Conv2d, TransposedIsAdjoint) {
  std::uint64_t seed = 100;
  for (const ConvCase& c : random_conv_cases(30, 2)) {
    const ConvGeometry g = geometry_of(c);
    const Tensor<double> x = random_tensor({c.n, c.h, c.w, c.ci}, ++seed);
    const Tensor<double> w = random_tensor({c.k, c.k, c.ci, c.co}, ++seed);
    const Tensor<double> yv = random_tensor({c.n, g.out_h, g.out_w, c.co}, ++seed);
    Tensor<double> cx;
    conv2d_forward<double>(x, w, nullptr, g, cx);
    Tensor<double> ty;
    conv2d_backward_data<double>(yv, w, g, ty);
    double lhs = 0.0;
    double rhs = 0.0;
    for (std::size_t i = 0; i < cx.size(); ++i) lhs += cx[i] * yv[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * ty[i];
    EXPECT_NEAR(lhs, rhs, 1e-6);
  }
}

TEST(PartialConv, FullMaskEqualsStandardConv) {
  std::uint64_t seed = 300;
  for (const ConvCase& c : random_conv_cases(100, 3)) {
    const ConvGeometry g = geometry_of(c);
    Tape<double> tape;
    const Var<double> x = tape.constant(random_tensor({c.n, c.h, c.w, c.ci}, ++seed));
    const Var<double> w = tape.constant(random_tensor({c.k, c.k, c.ci, c.co}, ++seed));
    const Var<double> b = tape.constant(random_tensor({c.co}, ++seed));
    const Tensor<double> mask({c.n, c.h, c.w, 1}, 1.0);
    Tensor<double> mask_out;
    const Var<double> yp = partial_conv2d(tape, x, mask, w, b, g, &mask_out);
    const Var<double> ys = conv2d(tape, x, w, b, g);
    const Tensor<double>& a = tape.value(yp);
    const Tensor<double>& s = tape.value(ys);
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], s[i], 1e-12);
    for (double m : mask_out.values()) ASSERT_EQ(m, 1.0);
  }
}

TEST(PartialConv, ZeroMaskGivesZeros) {
  Tape<double> tape;
  const ConvGeometry g = conv_geometry(6, 6, 3, 1, 1);
  const Var<double> x = tape.constant(random_tensor({1, 6, 6, 2}, 1));
  const Var<double> w = tape.constant(random_tensor({3, 3, 2, 3}, 2));
  const Var<double> b = tape.constant(random_tensor({3}, 3));
  Tensor<double> mask_out;
  const Var<double> y = partial_conv2d(tape, x, Tensor<double>({1, 6, 6, 1}, 0.0), w, b, g, &mask_out);
  for (double v : tape.value(y).values()) EXPECT_EQ(v, 0.0);
  for (double v : mask_out.values()) EXPECT_EQ(v, 0.0);
}

TEST(PartialConv, SingleHoleRenormalization) {
  Tensor<double> x({1, 5, 5, 1});
  for (int i = 0; i < 25; ++i) x[i] = i + 1;
  Tensor<double> mask({1, 5, 5, 1}, 1.0);
  mask.at(0, 2, 2, 0) = 0.0;
  Tape<double> tape;
  const Var<double> y = partial_conv2d<double>(tape, tape.constant(x), mask, tape.constant(Tensor<double>({3, 3, 1, 1}, 1.0)), -1,
                                       conv_geometry(5, 5, 3, 1, 1), nullptr);
  // Neighbors of the center (value 13): 7 8 9 12 14 17 18 19.
  const double neighbors = 7 + 8 + 9 + 12 + 14 + 17 + 18 + 19;
  EXPECT_EQ(tape.value(y).at(0, 2, 2, 0), neighbors * 9.0 / 8.0);
  EXPECT_EQ(tape.value(y).at(0, 0, 0, 0), 1 + 2 + 6 + 7.0);
}

TEST(PartialConv, MatchesScalarReferenceOnRandomMasks) {
  std::uint64_t seed = 500;
  for (const ConvCase& c : random_conv_cases(60, 4)) {
    const ConvGeometry g = geometry_of(c);
    const Tensor<double> xv = random_tensor({c.n, c.h, c.w, c.ci}, ++seed);
    const Tensor<double> wv = random_tensor({c.k, c.k, c.ci, c.co}, ++seed);
    const Tensor<double> bv = random_tensor({c.co}, ++seed);
    const Tensor<double> mask = random_mask({c.n, c.h, c.w, 1}, ++seed, 0.4);
    Tape<double> tape;
    Tensor<double> mask_out;
    const Var<double> y = partial_conv2d(tape, tape.constant(xv), mask, tape.constant(wv), tape.constant(bv), g, &mask_out);
    Tensor<double> ref_mask;
    const Tensor<double> ref = scalar_partial_conv(xv, mask, wv, bv, g, ref_mask);
    ASSERT_EQ(mask_out, ref_mask);
    for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_NEAR(tape.value(y)[i], ref[i], 1e-12);
  }
}

TEST(Activations, LeakyReluValues) {
  Tape<double> tape;
  const Var<double> y = leaky_relu(tape, tape.constant(Tensor<double>({2}, std::vector<double>{-1.0, 2.0})), 0.2);
  EXPECT_DOUBLE_EQ(tape.value(y)[0], -0.2);
  EXPECT_EQ(tape.value(y)[1], 2.0);
}

TEST(Activations, SigmoidAndSoftplusStayInRange) {
  Tape<double> tape;
  const Var<double> x = tape.constant(Tensor<double>({4}, std::vector<double>{-800.0, -1.0, 3.0, 800.0}));
  for (double v : tape.value(sigmoid(tape, x)).values()) EXPECT_TRUE(v >= 0.0 && v <= 1.0);
  const Tensor<double> sp = tape.value(softplus(tape, x));
  EXPECT_GE(sp[0], 0.0);
  EXPECT_NEAR(sp[1], std::log1p(std::exp(-1.0)), 1e-15);
  EXPECT_EQ(sp[3], 800.0);
}

TEST(Norms, InstanceNormStandardizesEachChannel) {
  Tape<double> tape;
  const Var<double> y = instance_norm(tape, tape.constant(random_tensor({2, 4, 5, 3}, 9, -3.0, 5.0)), 1e-12);
  const Tensor<double>& v = tape.value(y);
  for (int n = 0; n < 2; ++n) {
    for (int c = 0; c < 3; ++c) {
      double s = 0.0, s2 = 0.0;
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 5; ++j) {
          s += v.at(n, i, j, c);
          s2 += v.at(n, i, j, c) * v.at(n, i, j, c);
        }
      }
      EXPECT_NEAR(s / 20.0, 0.0, 1e-12);
      EXPECT_NEAR(s2 / 20.0, 1.0, 1e-9);
    }
  }
}

TEST(Norms, BatchNormEvalUsesRunningStatistics) {
  BatchNormStats<double> stats{Tensor<double>({2}, std::vector<double>{1.0, -2.0}),
                               Tensor<double>({2}, std::vector<double>{4.0, 0.25})};
  Tape<double> tape;
  const Var<double> gamma = tape.constant(Tensor<double>({2}, 1.0));
  const Var<double> beta = tape.constant(Tensor<double>({2}, 0.0));
  const Var<double> x = tape.constant(Tensor<double>({1, 1, 1, 2}, std::vector<double>{3.0, -1.0}));
  const Var<double> y = batch_norm(tape, x, gamma, beta, stats, false, 0.0, 0.99);
  EXPECT_DOUBLE_EQ(tape.value(y)[0], 1.0);
  EXPECT_DOUBLE_EQ(tape.value(y)[1], 2.0);
  EXPECT_EQ(stats.running_mean[0], 1.0);
}

TEST(Norms, BatchNormTrainUpdatesRunningStatistics) {
  BatchNormStats<double> stats{Tensor<double>({1}, 0.0), Tensor<double>({1}, 1.0)};
  Tape<double> tape;
  const Var<double> x = tape.constant(Tensor<double>({2, 1, 2, 1}, std::vector<double>{1.0, 2.0, 3.0, 6.0}));
  batch_norm(tape, x, tape.constant(Tensor<double>({1}, 1.0)), tape.constant(Tensor<double>({1}, 0.0)), stats, true,
             1e-5, 0.9);
  EXPECT_NEAR(stats.running_mean[0], 0.1 * 3.0, 1e-15);
  // Unbiased batch variance: sum((x - 3)^2) / 3 = 14 / 3.
  EXPECT_NEAR(stats.running_var[0], 0.9 + 0.1 * 14.0 / 3.0, 1e-15);
}

TEST(Pooling, SameAverageCountsInBoundsTapsOnly) {
  Tape<double> tape;
  Tensor<double> x({1, 2, 2, 1}, std::vector<double>{1.0, 2.0, 3.0, 4.0});
  const Var<double> y = avg_pool(tape, tape.constant(x), conv_geometry_same(2, 2, 3, 2));
  ASSERT_EQ(tape.value(y).size(), 1u);
  EXPECT_DOUBLE_EQ(tape.value(y)[0], 2.5);
}

TEST(Reductions, LossPrimitives) {
  Tape<double> tape;
  const Var<double> x = tape.constant(Tensor<double>({4}, std::vector<double>{-2.0, -0.5, 0.0, 3.0}));
  EXPECT_DOUBLE_EQ(tape.value(mean(tape, x))[0], 0.125);
  const Tensor<double> mz = tape.value(min_zero(tape, x));
  EXPECT_EQ(mz[0], -2.0);
  EXPECT_EQ(mz[3], 0.0);
  const Tensor<double> target({4}, std::vector<double>{0.0, 0.0, 1.0, 0.0});
  const Tensor<double> m({4}, std::vector<double>{1.0, 0.0, 1.0, 0.0});
  EXPECT_DOUBLE_EQ(tape.value(masked_l1_mean(tape, x, target, m))[0], 1.5);
  EXPECT_EQ(tape.value(masked_l1_mean(tape, x, target, Tensor<double>({4}, 0.0)))[0], 0.0);
}

TEST(Tape, ShapeMismatchThrows) {
  Tape<double> tape;
  const Var<double> a = tape.constant(Tensor<double>({1, 2, 2, 1}));
  const Var<double> b = tape.constant(Tensor<double>({1, 2, 3, 1}));
  EXPECT_THROW(add(tape, a, b), Error);
  EXPECT_THROW(conv2d(tape, a, tape.constant(Tensor<double>({3, 3, 2, 1})), -1, conv_geometry(2, 2, 3, 1, 1)), Error);
}

// Gradient checks, one per differentiable op.

TEST(OpGradients, Conv2d) {
  auto x = param("x", random_tensor({2, 5, 6, 2}, 1));
  auto w = param("w", random_tensor({3, 3, 2, 3}, 2));
  auto b = param("b", random_tensor({3}, 3));
  const ConvGeometry g = conv_geometry_same(5, 6, 3, 2);
  const auto r = check_op({&x, &w, &b}, [&](Tape<double>& t) {
    return conv2d(t, t.parameter(x), t.parameter(w), t.parameter(b), g);
  });
  EXPECT_LT(r.max_rel_error, kOpGradTolerance) << r.worst;
  EXPECT_EQ(r.kink_skipped, 0u);
}

TEST(OpGradients, PartialConv) {
  auto x = param("x", random_tensor({2, 6, 6, 2}, 4));
  auto w = param("w", random_tensor({3, 3, 2, 2}, 5));
  auto b = param("b", random_tensor({2}, 6));
  const Tensor<double> mask = random_mask({2, 6, 6, 1}, 7, 0.3);
  const ConvGeometry g = conv_geometry(6, 6, 3, 2, 1);
  const auto r = check_op({&x, &w, &b}, [&](Tape<double>& t) {
    return partial_conv2d<double>(t, t.parameter(x), mask, t.parameter(w), t.parameter(b), g, nullptr);
  });
  EXPECT_LT(r.max_rel_error, kOpGradTolerance) << r.worst;
}

TEST(OpGradients, TransposedConv) {
  auto x = param("x", random_tensor({1, 3, 3, 2}, 8));
  auto w = param("w", random_tensor({4, 4, 3, 2}, 9));
  auto b = param("b", random_tensor({3}, 10));
  const ConvGeometry g = transposed_geometry(3, 3, 4, 2, 1);
  const auto r = check_op({&x, &w, &b}, [&](Tape<double>& t) {
    return conv_transpose2d(t, t.parameter(x), t.parameter(w), t.parameter(b), g);
  });
  EXPECT_LT(r.max_rel_error, kOpGradTolerance) << r.worst;
}

TEST(OpGradients, BatchNormTrain) {
  auto x = param("x", random_tensor({2, 3, 3, 2}, 11));
  auto gamma = param("gamma", random_tensor({2}, 12, 0.5, 1.5));
  auto beta = param("beta", random_tensor({2}, 13));
  BatchNormStats<double> stats{Tensor<double>({2}, 0.0), Tensor<double>({2}, 1.0)};
  const auto r = check_op({&x, &gamma, &beta}, [&](Tape<double>& t) {
    return batch_norm(t, t.parameter(x), t.parameter(gamma), t.parameter(beta), stats, true, 1e-5, 0.99);
  });
  EXPECT_LT(r.max_rel_error, kOpGradTolerance) << r.worst;
}

TEST(OpGradients, BatchNormEval) {
  auto x = param("x", random_tensor({2, 3, 3, 2}, 14));
  auto gamma = param("gamma", random_tensor({2}, 15, 0.5, 1.5));
  auto beta = param("beta", random_tensor({2}, 16));
  BatchNormStats<double> stats{Tensor<double>({2}, 0.3), Tensor<double>({2}, 2.0)};
  const auto r = check_op({&x, &gamma, &beta}, [&](Tape<double>& t) {
    return batch_norm(t, t.parameter(x), t.parameter(gamma), t.parameter(beta), stats, false, 1e-5, 0.99);
  });
  EXPECT_LT(r.max_rel_error, kOpGradTolerance) << r.worst;
}

TEST(OpGradients, InstanceNorm) {
  auto x = param("x", random_tensor({2, 3, 4, 2}, 17));
  const auto r = check_op({&x}, [&](Tape<double>& t) { return instance_norm(t, t.parameter(x), 1e-5); });
  EXPECT_LT(r.max_rel_error, kOpGradTolerance) << r.worst;
}

TEST(OpGradients, Pointwise) {
  auto x = param("x", random_tensor({1, 3, 3, 2}, 18, -2.0, 2.0));
  auto y = param("y", random_tensor({1, 3, 3, 2}, 19));
  auto z = param("z", random_tensor({1, 3, 3, 1}, 20));
  const auto r = check_op({&x, &y, &z}, [&](Tape<double>& t) {
    const Var<double> a = leaky_relu(t, t.parameter(x), 0.2);
    const Var<double> s = weighted_sum(t, sigmoid(t, a), 1.5, softplus(t, t.parameter(y)), -0.7);
    const Var<double> c = concat_channels(t, affine(t, add(t, s, t.parameter(x)), 2.0, 0.1), t.parameter(z));
    return min_zero(t, affine(t, c, 1.0, -0.5));
  });
  EXPECT_LT(r.max_rel_error, kOpGradTolerance) << r.worst;
}

TEST(OpGradients, AvgPoolAndMean) {
  auto x = param("x", random_tensor({2, 5, 5, 2}, 21));
  const auto r = check_op({&x}, [&](Tape<double>& t) {
    return avg_pool(t, t.parameter(x), conv_geometry_same(5, 5, 3, 2));
  });
  EXPECT_LT(r.max_rel_error, kOpGradTolerance) << r.worst;
  const auto rm = check_gradients({&x}, [&](Tape<double>& t) { return mean(t, t.parameter(x)); });
  EXPECT_LT(rm.max_rel_error, kOpGradTolerance) << rm.worst;
}

TEST(OpGradients, SpectralWeight) {
  auto w = param("w", random_tensor({3, 3, 2, 4}, 22));
  const Tensor<double> u = random_tensor({4}, 23);
  const Tensor<double> v = random_tensor({18}, 24);
  const auto r = check_op({&w}, [&](Tape<double>& t) { return spectral_weight(t, t.parameter(w), u, v); });
  EXPECT_LT(r.max_rel_error, kOpGradTolerance) << r.worst;
}

}  // namespace
}  // namespace gforge::nn
