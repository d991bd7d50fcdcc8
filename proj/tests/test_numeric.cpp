#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "g2s/autodiff.hpp"
#include "g2s/layers.hpp"
#include "g2s/params.hpp"
#include "g2s/tensor.hpp"
#include "gradcheck.hpp"

using namespace g2s;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double a = 1.0) { return uniform_tensor(std::move(shape), a, rng); }

}  // namespace

TEST(Rng, MatchesStandardMersenneTwisterStream) {
  // The standard pins the 10000th draw of a default-seeded mt19937_64.
  Rng rng(5489);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = rng.next_u64();
  EXPECT_EQ(x, 9981545732273789042ULL);
}

TEST(Rng, SameSeedSameStreamAndDerivedStreamsDiffer) {
  Rng a(17), b(17);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.uniform(), b.uniform());
  Rng base(17);
  EXPECT_NE(base.derive(0).next_u64(), base.derive(1).next_u64());
  EXPECT_EQ(base.derive(3).next_u64(), Rng(17).derive(3).next_u64());
}

TEST(Rng, BelowStaysInRangeAndRejectsZero) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.below(7), 7u);
  EXPECT_THROW(rng.below(0), ArgumentError);
}

TEST(DenseLayer, IdentityWeights) {
  Tape tape;
  Var x = tape.constant(Tensor::matrix({{1, 2}}));
  Var w = tape.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  Var b = tape.constant(Tensor(Shape{2}, std::vector<double>{0, 0}));
  const Tensor& y = dense_layer(x, w, b, Activation::none).value();
  EXPECT_EQ(y.data, (std::vector<double>{1, 2}));
}

TEST(DenseLayer, ReluClampsNegatives) {
  Tape tape;
  Var x = tape.constant(Tensor::matrix({{-3}}));
  Var w = tape.constant(Tensor::matrix({{1}}));
  Var b = tape.constant(Tensor(Shape{1}, std::vector<double>{0}));
  EXPECT_EQ(dense_layer(x, w, b, Activation::relu).value().data[0], 0.0);
}

TEST(DenseLayer, TanhMatchesScalarLoop) {
  Rng rng(7);
  Tensor w = random_tensor(Shape{2, 3}, rng);
  Tensor b = random_tensor(Shape{3}, rng);
  Tape tape;
  const std::vector<double> x{0.5, -0.5};
  const Tensor& y =
      dense_layer(tape.constant(Tensor::matrix({{0.5, -0.5}})), tape.constant(w), tape.constant(b), Activation::tanh)
          .value();
  for (std::size_t j = 0; j < 3; ++j) {
    double acc = b.data[j];
    for (std::size_t i = 0; i < 2; ++i) acc += x[i] * w.data[i * 3 + j];
    EXPECT_DOUBLE_EQ(y.data[j], std::tanh(acc));
  }
}

TEST(DenseLayer, ShapeMismatchNamesBothShapes) {
  Tape tape;
  Var x = tape.constant(Tensor(Shape{1, 3}));
  Var w = tape.constant(Tensor(Shape{2, 2}));
  Var b = tape.constant(Tensor(Shape{2}));
  try {
    dense_layer(x, w, b, Activation::none);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[1,3]"), std::string::npos);
    EXPECT_NE(msg.find("[2,2]"), std::string::npos);
  }
}

TEST(Softmax, UniformScores) {
  const auto p = softmax(std::vector<double>{0, 0, 0});
  for (double v : p) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
}

TEST(Softmax, StableForLargeEqualScores) {
  const auto p = softmax(std::vector<double>{1000, 1000});
  EXPECT_EQ(p[0], 0.5);
  EXPECT_EQ(p[1], 0.5);
}

TEST(Softmax, MatchesExtendedPrecisionFormula) {
  const auto p = softmax(std::vector<double>{1, 2, 3});
  long double denom = 0;
  for (int i = 1; i <= 3; ++i) denom += std::exp(static_cast<long double>(i));
  for (int i = 0; i < 3; ++i) {
    const long double expect = std::exp(static_cast<long double>(i + 1)) / denom;
    EXPECT_NEAR(p[i], static_cast<double>(expect), 1e-15);
  }
}

TEST(Softmax, EmptyInputIsArgumentError) {
  EXPECT_THROW(softmax(std::vector<double>{}), ArgumentError);
}

TEST(Softmax, RandomInputsAreProbabilityVectors) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(1 + rng.below(20));
    for (double& v : x) v = rng.uniform(-50, 50);
    const auto p = softmax(x);
    double s = 0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Backward, SumGivesAllOnes) {
  ParamSet ps;
  Tensor& w = ps.add("W", Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3, 4}));
  Tape tape;
  backward(sum(tape.param(w)), ps);
  EXPECT_EQ(w.grad, (std::vector<double>{1, 1, 1, 1}));
  EXPECT_EQ(tape.size(), 0u);
}

TEST(Backward, SquaredErrorClosedForm) {
  ParamSet ps;
  Tensor& w = ps.add("W", Tensor::row({0.3, -0.7}));
  const std::vector<double> x{2.0, 1.5};
  const double y = 0.25;
  Tape tape;
  Var xv = tape.constant(Tensor(Shape{2, 1}, x));
  Var r = add(matmul(tape.param(w), xv), tape.constant(Tensor(Shape{1, 1}, std::vector<double>{-y})));
  backward(sum(mul(r, r)), ps);
  const double resid = 0.3 * 2.0 - 0.7 * 1.5 - y;
  EXPECT_NEAR(w.grad[0], 2 * resid * x[0], 1e-12);
  EXPECT_NEAR(w.grad[1], 2 * resid * x[1], 1e-12);
}

TEST(Backward, UnreachableParamsGetZeroGradient) {
  ParamSet ps;
  Tensor& a = ps.add("a", Tensor::row({1.0}));
  Tensor& b = ps.add("b", Tensor::row({2.0}));
  Tape tape;
  backward(sum(tape.param(a)), ps);
  EXPECT_EQ(a.grad, std::vector<double>{1.0});
  EXPECT_EQ(b.grad, std::vector<double>{0.0});
}

TEST(Backward, NonScalarLossIsArgumentError) {
  ParamSet ps;
  Tensor& a = ps.add("a", Tensor::row({1.0, 2.0}));
  Tape tape;
  EXPECT_THROW(backward(tape.param(a), ps), ArgumentError);
}

TEST(Backward, NonFiniteValueIsNumericError) {
  Tape tape;
  Var x = tape.constant(Tensor::row({1e308}));
  EXPECT_THROW(scale(x, 10.0), NumericError);
}

// Every differentiable op composed into one loss, checked coordinate-wise.
TEST(Backward, ComposedOpsMatchFiniteDifferences) {
  Rng rng(13);
  ParamSet ps;
  ps.add("x", random_tensor(Shape{3, 4}, rng));
  ps.add("w", random_tensor(Shape{4, 4}, rng));
  ps.add("b", random_tensor(Shape{4}, rng, 0.3));
  ps.add("lw", random_tensor(Shape{6, 8}, rng));
  ps.add("lb", random_tensor(Shape{8}, rng, 0.3));
  const RowGroups groups{{0, 2}, {1}, {}, {0, 1, 2}};
  auto build = [&](Tape& tape) {
    Var x = tape.param(ps.get("x"));
    Var h = dense_layer(x, tape.param(ps.get("w")), tape.param(ps.get("b")), Activation::tanh);
    Var s = sigmoid(h);
    Var m = segment_mean(s, groups);
    Var mx = segment_max(mul(h, s), groups);
    Var cat = concat_cols({m, scale(mx, 0.5)});
    Var rows = concat_rows(std::vector<Var>{slice_cols(cat, 1, 4), gather_rows(h, {2, 0})});
    Var att = softmax_rows(reshape(slice_cols(rows, 0, 3), Shape{1, 18}));
    LstmState st{tape.constant(Tensor(Shape{1, 2})), tape.constant(Tensor(Shape{1, 2}))};
    st = lstm_step(gather_rows(h, {1}), st, tape.param(ps.get("lw")), tape.param(ps.get("lb")));
    st = lstm_step(gather_rows(s, {0}), st, tape.param(ps.get("lw")), tape.param(ps.get("lb")));
    Var logits = concat_rows(std::vector<Var>{concat_cols({st.h, st.c}), slice_cols(rows, 0, 4)});
    return add(cross_entropy(logits, {1, 3, 0, 2, 1, 0, 3}), sum(mul(att, att)));
  };
  {
    Tape tape;
    backward(build(tape), ps);
  }
  const auto worst = gradcheck::worst_gradient(ps, [&] {
    Tape tape(false);
    return build(tape).value().item();
  });
  EXPECT_LT(worst.rel_error, 1e-6) << worst.param << "[" << worst.index << "] analytic " << worst.analytic
                                   << " numeric " << worst.numeric;
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParamSet ps;
  Tensor& w = ps.add("w", Tensor::row({0.0}));
  ps.zero_grad();
  w.grad[0] = 1.0;
  ps.adam_step(0.001);
  // m_hat = 1, v_hat = 1 after bias correction.
  EXPECT_NEAR(w.data[0], -0.001 / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(ps.step(), 1u);
  EXPECT_EQ(w.grad[0], 0.0);
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  Rng rng(4);
  ParamSet ps;
  Tensor& w = ps.add("w", random_tensor(Shape{3, 3}, rng));
  const auto before = w.data;
  ps.zero_grad();
  ps.adam_step(0.01);
  EXPECT_EQ(w.data, before);
}

TEST(Adam, TwoStepsMatchHandUnrolledRecurrence) {
  ParamSet ps;
  Tensor& w = ps.add("w", Tensor::row({0.5}));
  const double g = 0.2, lr = 0.01;
  ps.zero_grad();
  w.grad[0] = g;
  ps.adam_step(lr);
  w.grad[0] = g;
  ps.adam_step(lr);
  double expected = 0.5, m = 0, v = 0;
  for (int t = 1; t <= 2; ++t) {
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1 - std::pow(0.9, t));
    const double vhat = v / (1 - std::pow(0.999, t));
    expected -= lr * mhat / (std::sqrt(vhat) + 1e-8);
  }
  EXPECT_NEAR(w.data[0], expected, 1e-15);
}

TEST(Adam, MissingGradientIsStateErrorNamingParameter) {
  ParamSet ps;
  ps.add("lonely", Tensor::row({1.0}));
  try {
    ps.adam_step(0.1);
    FAIL() << "expected StateError";
  } catch (const StateError& e) {
    EXPECT_NE(std::string(e.what()).find("lonely"), std::string::npos);
  }
}

TEST(ClipGlobalNorm, BelowThresholdUnchanged) {
  ParamSet ps;
  Tensor& a = ps.add("a", Tensor::row({6.0, 8.0}));
  ps.zero_grad();
  a.grad = {6.0, 8.0};
  EXPECT_DOUBLE_EQ(ps.clip_global_norm(20), 10.0);
  EXPECT_EQ(a.grad, (std::vector<double>{6.0, 8.0}));
}

TEST(ClipGlobalNorm, ThreeFourFiveScaling) {
  ParamSet ps;
  Tensor& a = ps.add("a", Tensor::row({0.0, 0.0}));
  ps.zero_grad();
  a.grad = {30.0, 40.0};
  EXPECT_DOUBLE_EQ(ps.clip_global_norm(20), 50.0);
  EXPECT_NEAR(a.grad[0], 12.0, 1e-12);
  EXPECT_NEAR(a.grad[1], 16.0, 1e-12);
}

TEST(ClipGlobalNorm, PostNormIsMinOfPreNormAndCap) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    ParamSet ps;
    ps.add("a", Tensor(Shape{5, 4}));
    ps.add("b", Tensor(Shape{7}));
    ps.zero_grad();
    const double spread = rng.uniform(0.1, 30.0);
    for (auto& e : ps.entries())
      for (double& g : e.value.grad) g = rng.uniform(-spread, spread);
    const double pre = ps.clip_global_norm(20.0);
    EXPECT_NEAR(ps.global_grad_norm(), std::min(pre, 20.0), 1e-9);
    EXPECT_LE(ps.global_grad_norm(), pre + 1e-12);
  }
}

TEST(Dropout, InferenceAndZeroRateAreIdentity) {
  Rng rng(1);
  Tape tape;
  Var x = tape.constant(random_tensor(Shape{3, 5}, rng));
  EXPECT_EQ(dropout(x, 0.5, rng, false).value().data, x.value().data);
  EXPECT_EQ(dropout(x, 0.0, rng, true).value().data, x.value().data);
}

TEST(Dropout, RateOneIsArgumentError) {
  Rng rng(1);
  Tape tape;
  Var x = tape.constant(Tensor::row({1.0}));
  EXPECT_THROW(dropout(x, 1.0, rng, true), ArgumentError);
  EXPECT_THROW(dropout(x, -0.1, rng, true), ArgumentError);
}

TEST(Dropout, KeptFractionAndExpectationPreserved) {
  Rng rng(11);
  Tape tape;
  Var x = tape.constant(Tensor(Shape{1, 100000}, 1.0));
  const Tensor& y = dropout(x, 0.5, rng, true).value();
  std::size_t kept = 0;
  double total = 0;
  for (double v : y.data) {
    kept += v != 0.0;
    total += v;
  }
  EXPECT_NEAR(static_cast<double>(kept) / 1e5, 0.5, 0.01);
  EXPECT_NEAR(total / 1e5, 1.0, 0.02);
}

TEST(ParamSet, NamesUniqueAndOrderIsInsertionOrder) {
  ParamSet ps;
  ps.add("z", Tensor(Shape{1}));
  ps.add("a", Tensor(Shape{2, 3}));
  EXPECT_THROW(ps.add("z", Tensor(Shape{1})), ArgumentError);
  EXPECT_EQ(ps.entries()[0].name, "z");
  EXPECT_EQ(ps.entries()[1].name, "a");
  for (const auto& e : ps.entries()) {
    EXPECT_EQ(e.m.size(), e.value.size());
    EXPECT_EQ(e.v.size(), e.value.size());
  }
}

TEST(Determinism, SameSeedSameParametersAfterTraining) {
  auto run = [] {
    Rng rng(99);
    ParamSet ps;
    ps.add("w", random_tensor(Shape{3, 2}, rng));
    ps.add("b", Tensor(Shape{2}));
    ps.zero_grad();
    for (int step = 0; step < 20; ++step) {
      Tape tape;
      Var x = tape.constant(random_tensor(Shape{4, 3}, rng));
      Var h = dense_layer(x, tape.param(ps.get("w")), tape.param(ps.get("b")), Activation::relu);
      backward(cross_entropy(dropout(h, 0.5, rng, true), {0, 1, 1, 0}), ps);
      ps.clip_global_norm(20);
      ps.adam_step(0.01);
    }
    return ps.get("w").data;
  };
  EXPECT_EQ(run(), run());
}
