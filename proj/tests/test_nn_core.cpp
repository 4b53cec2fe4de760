#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "fxh/errors.hpp"
#include "fxh/nn/gradient_check.hpp"
#include "fxh/nn/layers.hpp"
#include "fxh/nn/optimizer.hpp"
#include "fxh/nn/tape.hpp"

using namespace fxh;
using namespace fxh::nn;

namespace {

void randomize(ParameterSet& ps, std::uint64_t seed, double scale = 0.5) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (double& v : ps[i].data) v = u(rng);
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST(Lstm, ZeroParameters) {
  const LstmParams p = LstmParams::zeros(3, 2);
  const std::vector<double> zero(3, 0.0), x{0.7, -1.2};
  const LstmOutput a = lstm_step(p, zero, zero, x);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(a.s[k], 0.0);
    EXPECT_EQ(a.h[k], 0.0);
  }
  const LstmOutput b = lstm_step(LstmParams::zeros(1, 1), std::vector<double>{0.0}, std::vector<double>{2.0},
                                 std::vector<double>{0.3});
  EXPECT_DOUBLE_EQ(b.s[0], 1.0);
  EXPECT_NEAR(b.h[0], 0.5 * std::tanh(1.0), 1e-15);
  EXPECT_NEAR(b.h[0], 0.3808, 1e-4);
}

TEST(Lstm, SaturatedForgetGateCarriesState) {
  LstmParams p = LstmParams::zeros(1, 1);
  p.b_f.data[0] = 20.0;
  p.b_i.data[0] = 20.0;
  p.b_s.data[0] = 0.25;
  const LstmOutput out = lstm_step(p, std::vector<double>{0.0}, std::vector<double>{1.5}, std::vector<double>{0.0});
  EXPECT_NEAR(out.s[0], 1.5 + std::tanh(0.25), 1e-7);
}

TEST(Lstm, StateBounds) {
  LstmParams p = LstmParams::zeros(4, 3);
  Rng rng(3);
  for (Tensor* t : {&p.W_f, &p.W_i, &p.W_o, &p.W_s}) glorot_uniform(*t, rng);
  std::vector<double> h(4, 0.0), s(4, 0.0);
  for (int step = 0; step < 200; ++step) {
    auto x = random_vector(3, static_cast<std::uint64_t>(step) + 100);
    for (double& v : x) v *= 5.0;
    const LstmOutput o = lstm_step(p, h, s, x);
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_LE(std::fabs(o.s[k]), std::fabs(s[k]) + 1.0);
      EXPECT_LT(std::fabs(o.h[k]), 1.0);
    }
    h = o.h;
    s = o.s;
  }
  EXPECT_THROW(lstm_step(p, std::vector<double>(3, 0.0), s, std::vector<double>(3, 0.0)), std::invalid_argument);
}

TEST(Rnn, HandValuesAndRange) {
  const RnnParams z = RnnParams::zeros(2, 2);
  for (double v : rnn_step(z, std::vector<double>{0.3, -0.1}, std::vector<double>{4.0, 1.0})) EXPECT_EQ(v, 0.0);

  RnnParams p = RnnParams::zeros(1, 1);
  p.W_xh.data[0] = 1.0;
  EXPECT_NEAR(rnn_step(p, std::vector<double>{0.0}, std::vector<double>{0.5})[0], 0.4621, 1e-4);

  RnnParams big = RnnParams::zeros(3, 2);
  for (double& w : big.W_xh.data) w = 50.0;
  for (double v : rnn_step(big, std::vector<double>(3, 0.0), std::vector<double>{3.0, -1.0})) {
    EXPECT_LE(v, 1.0);
    EXPECT_GE(v, -1.0);
  }
  EXPECT_THROW(rnn_step(p, std::vector<double>{0.0}, std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST(Softmax, Examples) {
  for (double v : softmax(std::vector<double>(5, 3.3))) EXPECT_NEAR(v, 0.2, 1e-15);
  const auto a = softmax(std::vector<double>{std::log(1.0), std::log(3.0)});
  EXPECT_NEAR(a[0], 0.25, 1e-15);
  EXPECT_NEAR(a[1], 0.75, 1e-15);
  const auto big = softmax(std::vector<double>{1000.0, 1001.0});
  const auto small = softmax(std::vector<double>{0.0, 1.0});
  EXPECT_TRUE(std::isfinite(big[0]) && std::isfinite(big[1]));
  EXPECT_NEAR(big[0], small[0], 1e-15);
  EXPECT_NEAR(big[1], small[1], 1e-15);
  EXPECT_THROW(softmax(std::vector<double>{}), std::invalid_argument);
}

TEST(Softmax, ProbabilityVectorAndOrder) {
  const auto x = random_vector(20, 5);
  const auto p = softmax(x);
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_GE(p[i], 0.0);
    for (std::size_t j = 0; j < x.size(); ++j)
      if (x[i] < x[j]) EXPECT_LE(p[i], p[j]);
  }
  std::vector<double> shifted = x;
  for (double& v : shifted) v += 17.5;
  const auto q = softmax(shifted);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ParameterSet ps;
  ps.add("w", Tensor({3}, std::vector<double>{1.0, -2.0, 0.5}));
  const ParameterSet before = ps;
  AdamState st = AdamState::for_parameters(ps);
  for (int k = 0; k < 5; ++k) adam_update(ps, ps.zeros_like(), st, {});
  EXPECT_EQ(ps[0].data, before[0].data);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParameterSet ps;
  ps.add("w", Tensor({3}, std::vector<double>{1.0, -2.0, 0.5}));
  ParameterSet g = ps.zeros_like();
  g[0].data = {3.0, -0.01, 250.0};
  AdamState st = AdamState::for_parameters(ps);
  adam_update(ps, g, st, {});
  EXPECT_NEAR(ps[0].data[0], 1.0 - 1e-3, 1e-10);
  EXPECT_NEAR(ps[0].data[1], -2.0 + 1e-3, 1e-8);
  EXPECT_NEAR(ps[0].data[2], 0.5 - 1e-3, 1e-10);
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, ConstantGradientDecreasesMonotonically) {
  ParameterSet ps;
  ps.add("w", Tensor({1}, std::vector<double>{0.0}));
  ParameterSet g = ps.zeros_like();
  g[0].data[0] = 0.7;
  AdamState st = AdamState::for_parameters(ps);
  double prev = ps[0].data[0];
  for (int k = 0; k < 100; ++k) {
    adam_update(ps, g, st, {});
    EXPECT_LT(ps[0].data[0], prev);
    prev = ps[0].data[0];
  }
  ParameterSet other;
  other.add("w", Tensor({2}));
  EXPECT_THROW(adam_update(ps, other, st, {}), std::invalid_argument);
}

TEST(Adam, DeterministicAcrossRuns) {
  auto run = [] {
    ParameterSet ps;
    ps.add("w", Tensor({4}, std::vector<double>{0.1, 0.2, 0.3, 0.4}));
    AdamState st = AdamState::for_parameters(ps);
    for (int k = 0; k < 50; ++k) {
      ParameterSet g = ps.zeros_like();
      for (std::size_t i = 0; i < 4; ++i) g[0].data[i] = std::sin(ps[0].data[i] * (k + 1));
      adam_update(ps, g, st, {});
    }
    return ps[0].data;
  };
  EXPECT_EQ(run(), run());
}

TEST(GradientCheck, QuadraticIsExact) {
  ParameterSet ps;
  ps.add("a", Tensor({4, 5}));
  ps.add("b", Tensor({7}));
  // Keep coordinates away from zero: the probe's rounding error is relative to the
  // whole loss, not to the coordinate.
  Rng rng(1);
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (double& v : ps[i].data) v = (rng() % 2 ? 1.0 : -1.0) * mag(rng);
  const LossFn loss = [](const ParameterSet& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      for (double v : p[i].data) s += 0.5 * v * v;
    return LossEvaluation{s, 0};
  };
  const GradientFn grad = [](const ParameterSet& p) { return p; };
  const auto r = gradient_check(loss, grad, ps);
  EXPECT_LT(r.max_rel_error, 1e-9);
  EXPECT_EQ(r.checked, 27u);
}

TEST(GradientCheck, NonFiniteLossThrows) {
  ParameterSet ps;
  ps.add("a", Tensor({2}, std::vector<double>{1.0, 2.0}));
  const LossFn loss = [](const ParameterSet&) { return LossEvaluation{std::nan(""), 0}; };
  const GradientFn grad = [](const ParameterSet& p) { return p; };
  EXPECT_THROW(gradient_check(loss, grad, ps), NumericError);
}

TEST(Tape, LstmStepMatchesValueCell) {
  ParameterSet ps;
  const LstmLayer layer = LstmLayer::create(ps, "enc", 3, 4);
  Rng rng(9);
  layer.initialize(ps, rng, 1.0);
  const auto x = random_vector(3, 2), h0 = random_vector(4, 3), s0 = random_vector(4, 4);

  Tape tape(ps);
  const LstmLayer::State prev{tape.input(1, 4, h0), tape.input(1, 4, s0)};
  const LstmLayer::State next = layer.step(tape, prev, tape.input(1, 3, x));
  const LstmOutput want = lstm_step(layer.extract(ps), h0, s0, x);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(tape.value(next.h)[k], want.h[k], 1e-14);
    EXPECT_NEAR(tape.value(next.s)[k], want.s[k], 1e-14);
  }
}

TEST(Tape, RnnStepMatchesValueCell) {
  ParameterSet ps;
  const RnnLayer layer = RnnLayer::create(ps, "rnn", 2, 3, true);
  Rng rng(10);
  layer.initialize(ps, rng);
  ps[layer.bias].data = {0.1, -0.2, 0.3};
  const auto x = random_vector(2, 5), h0 = random_vector(3, 6);
  Tape tape(ps);
  const Var h = layer.step(tape, tape.input(1, 3, h0), tape.input(1, 2, x));
  const RnnParams p{ps[layer.W_hh], ps[layer.W_xh], ps[layer.bias]};
  const auto want = rnn_step(p, h0, x);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(tape.value(h)[k], want[k], 1e-14);
}

// Small sequence model built from every layer type: LSTM over 4 steps, an RNN on
// top, attention-style softmax pooling and a ReLU dense head with an MSE loss.
class ComposedModel : public ::testing::Test {
 protected:
  static constexpr std::size_t B = 3, T = 4, In = 2, H = 5;

  void SetUp() override {
    lstm = LstmLayer::create(ps, "lstm", In, H);
    rnn = RnnLayer::create(ps, "rnn", H, H, true);
    score = DenseLayer::create(ps, "score", H, 1, Activation::identity);
    hidden = DenseLayer::create(ps, "hidden", H, 6, Activation::relu);
    out = DenseLayer::create(ps, "out", 6, 1, Activation::identity);
    randomize(ps, 42, 0.6);
    xs = random_vector(B * T * In, 11);
    y = random_vector(B, 12);
  }

  Var build(Tape& tape) const {
    LstmLayer::State st;
    Var h = kNone;
    std::vector<Var> states, scores;
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> xt(B * In);
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t k = 0; k < In; ++k) xt[b * In + k] = xs[(b * T + t) * In + k];
      st = lstm.step(tape, st, tape.input(B, In, xt));
      h = rnn.step(tape, h, st.h);
      states.push_back(h);
      scores.push_back(score.forward(tape, h));
    }
    const Var alpha = tape.softmax_rows(tape.concat_cols(scores));
    const Var ctx = tape.weighted_sum(alpha, states);
    const Var pred = out.forward(tape, hidden.forward(tape, ctx));
    return tape.squared_error(pred, y, 1.0 / B);
  }

  ParameterSet ps;
  LstmLayer lstm;
  RnnLayer rnn;
  DenseLayer score, hidden, out;
  std::vector<double> xs, y;
};

TEST_F(ComposedModel, ReverseModeMatchesFiniteDifferences) {
  const LossFn loss = [this](const ParameterSet& p) {
    Tape tape(p);
    const Var l = build(tape);
    return LossEvaluation{tape.scalar(l), tape.relu_pattern()};
  };
  const GradientFn grad = [this](const ParameterSet& p) {
    Tape tape(p);
    const Var l = build(tape);
    ParameterSet g = p.zeros_like();
    tape.backward(l, g);
    return g;
  };
  const auto r = gradient_check(loss, grad, ps);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_tensor << "[" << r.worst_index << "] analytic " << r.worst_analytic
                                   << " numeric " << r.worst_numeric;
  EXPECT_GT(r.checked, 100u);
}

TEST_F(ComposedModel, BackwardAccumulatesIntoGradients) {
  Tape tape(ps);
  const Var l = build(tape);
  ParameterSet once = ps.zeros_like();
  tape.backward(l, once);
  ParameterSet twice = ps.zeros_like();
  tape.backward(l, twice);
  tape.backward(l, twice);
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t k = 0; k < ps[i].size(); ++k) EXPECT_NEAR(twice[i].data[k], 2.0 * once[i].data[k], 1e-12);
}
