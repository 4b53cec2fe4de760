#include "fxh/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fxh::nn {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// W[:, 0:a.size()] a + W[:, a.size():] b + bias
std::vector<double> affine2(const Tensor& W, std::span<const double> a, std::span<const double> b,
                            const Tensor& bias) {
  const std::size_t rows = W.rows();
  const std::size_t cols = W.cols();
  if (a.size() + b.size() != cols)
    throw std::invalid_argument("input length " + std::to_string(a.size() + b.size()) +
                                " does not match weight " + W.shape_string());
  if (!bias.data.empty() && bias.size() != rows)
    throw std::invalid_argument("bias " + bias.shape_string() + " does not match weight " + W.shape_string());
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = bias.data.empty() ? 0.0 : bias.data[r];
    for (std::size_t k = 0; k < a.size(); ++k) s += W(r, k) * a[k];
    for (std::size_t k = 0; k < b.size(); ++k) s += W(r, a.size() + k) * b[k];
    out[r] = s;
  }
  return out;
}

double activate(Activation a, double v) {
  switch (a) {
    case Activation::relu: return v > 0.0 ? v : 0.0;
    case Activation::tanh: return std::tanh(v);
    case Activation::identity: return v;
  }
  return v;
}

std::size_t add_zeros(ParameterSet& ps, const std::string& name, std::vector<std::size_t> shape) {
  return ps.add(name, Tensor(std::move(shape)));
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "identity" || s == "linear") return Activation::identity;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

LstmParams LstmParams::zeros(std::size_t hidden, std::size_t input) {
  LstmParams p;
  for (Tensor* w : {&p.W_f, &p.W_i, &p.W_o, &p.W_s}) *w = Tensor({hidden, hidden + input});
  for (Tensor* b : {&p.b_f, &p.b_i, &p.b_o, &p.b_s}) *b = Tensor({hidden});
  return p;
}

RnnParams RnnParams::zeros(std::size_t hidden, std::size_t input, bool with_bias) {
  RnnParams p;
  p.W_hh = Tensor({hidden, hidden});
  p.W_xh = Tensor({hidden, input});
  if (with_bias) p.bias = Tensor({hidden});
  return p;
}

LstmOutput lstm_step(const LstmParams& p, std::span<const double> h_prev, std::span<const double> s_prev,
                     std::span<const double> x) {
  const std::size_t m = p.hidden();
  if (h_prev.size() != m || s_prev.size() != m)
    throw std::invalid_argument("lstm_step: state length does not match hidden width " + std::to_string(m));
  for (const Tensor* w : {&p.W_i, &p.W_o, &p.W_s})
    if (w->shape != p.W_f.shape) throw std::invalid_argument("lstm_step: gate weights differ in shape");
  const auto f = affine2(p.W_f, h_prev, x, p.b_f);
  const auto i = affine2(p.W_i, h_prev, x, p.b_i);
  const auto o = affine2(p.W_o, h_prev, x, p.b_o);
  const auto g = affine2(p.W_s, h_prev, x, p.b_s);
  LstmOutput out{std::vector<double>(m), std::vector<double>(m)};
  for (std::size_t k = 0; k < m; ++k) {
    out.s[k] = sigmoid(f[k]) * s_prev[k] + sigmoid(i[k]) * std::tanh(g[k]);
    out.h[k] = sigmoid(o[k]) * std::tanh(out.s[k]);
  }
  return out;
}

std::vector<double> rnn_step(const RnnParams& p, std::span<const double> h_prev, std::span<const double> x) {
  const std::size_t m = p.W_hh.rows();
  if (p.W_hh.cols() != m || p.W_xh.rows() != m)
    throw std::invalid_argument("rnn_step: inconsistent weight shapes");
  if (h_prev.size() != m) throw std::invalid_argument("rnn_step: state length mismatch");
  if (x.size() != p.W_xh.cols()) throw std::invalid_argument("rnn_step: input length mismatch");
  const Tensor none;
  auto a = affine2(p.W_hh, h_prev, {}, p.bias);
  const auto b = affine2(p.W_xh, x, {}, none);
  for (std::size_t k = 0; k < m; ++k) a[k] = std::tanh(a[k] + b[k]);
  return a;
}

std::vector<double> dense_forward(const DenseParams& p, std::span<const double> x) {
  auto y = affine2(p.W, x, {}, p.b);
  for (double& v : y) v = activate(p.activation, v);
  return y;
}

std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("softmax: empty input");
  const double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out[k] = std::exp(scores[k] - m);
    sum += out[k];
  }
  for (double& v : out) v /= sum;
  return out;
}

// ---------------------------------------------------------------------------

DenseLayer DenseLayer::create(ParameterSet& ps, const std::string& prefix, std::size_t in, std::size_t out,
                              Activation act) {
  DenseLayer l;
  l.W = add_zeros(ps, prefix + ".W", {out, in});
  l.b = add_zeros(ps, prefix + ".b", {out});
  l.in = in;
  l.out = out;
  l.activation = act;
  return l;
}

DenseLayer DenseLayer::bind(const ParameterSet& ps, const std::string& prefix, Activation act) {
  DenseLayer l;
  l.W = ps.index(prefix + ".W");
  l.b = ps.index(prefix + ".b");
  l.out = ps[l.W].rows();
  l.in = ps[l.W].cols();
  l.activation = act;
  return l;
}

void DenseLayer::initialize(ParameterSet& ps, Rng& rng) const {
  glorot_uniform(ps[W], rng);
  ps[b].data.assign(out, 0.0);
}

Var DenseLayer::forward(Tape& tape, Var x) const {
  const LinearTerm term{x, W, 0};
  const Var y = tape.linear({&term, 1}, b);
  switch (activation) {
    case Activation::relu: return tape.relu(y);
    case Activation::tanh: return tape.tanh(y);
    case Activation::identity: return y;
  }
  return y;
}

RnnLayer RnnLayer::create(ParameterSet& ps, const std::string& prefix, std::size_t in, std::size_t hidden,
                          bool with_bias) {
  RnnLayer l;
  l.W_hh = add_zeros(ps, prefix + ".W_hh", {hidden, hidden});
  l.W_xh = add_zeros(ps, prefix + ".W_xh", {hidden, in});
  if (with_bias) l.bias = add_zeros(ps, prefix + ".bias", {hidden});
  l.hidden = hidden;
  l.in = in;
  return l;
}

RnnLayer RnnLayer::bind(const ParameterSet& ps, const std::string& prefix) {
  RnnLayer l;
  l.W_hh = ps.index(prefix + ".W_hh");
  l.W_xh = ps.index(prefix + ".W_xh");
  if (auto b = ps.find(prefix + ".bias")) l.bias = *b;
  l.hidden = ps[l.W_hh].rows();
  l.in = ps[l.W_xh].cols();
  return l;
}

void RnnLayer::initialize(ParameterSet& ps, Rng& rng) const {
  glorot_uniform(ps[W_hh], rng);
  glorot_uniform(ps[W_xh], rng);
  if (bias != kNoParam) ps[bias].data.assign(hidden, 0.0);
}

Var RnnLayer::step(Tape& tape, Var h_prev, Var x) const {
  LinearTerm terms[2] = {{x, W_xh, 0}, {h_prev, W_hh, 0}};
  const std::size_t n = h_prev == kNone ? 1 : 2;
  return tape.tanh(tape.linear({terms, n}, bias));
}

LstmLayer LstmLayer::create(ParameterSet& ps, const std::string& prefix, std::size_t in, std::size_t hidden) {
  LstmLayer l;
  l.W_f = add_zeros(ps, prefix + ".W_f", {hidden, hidden + in});
  l.W_i = add_zeros(ps, prefix + ".W_i", {hidden, hidden + in});
  l.W_o = add_zeros(ps, prefix + ".W_o", {hidden, hidden + in});
  l.W_s = add_zeros(ps, prefix + ".W_s", {hidden, hidden + in});
  l.b_f = add_zeros(ps, prefix + ".b_f", {hidden});
  l.b_i = add_zeros(ps, prefix + ".b_i", {hidden});
  l.b_o = add_zeros(ps, prefix + ".b_o", {hidden});
  l.b_s = add_zeros(ps, prefix + ".b_s", {hidden});
  l.hidden = hidden;
  l.in = in;
  return l;
}

LstmLayer LstmLayer::bind(const ParameterSet& ps, const std::string& prefix) {
  LstmLayer l;
  l.W_f = ps.index(prefix + ".W_f");
  l.W_i = ps.index(prefix + ".W_i");
  l.W_o = ps.index(prefix + ".W_o");
  l.W_s = ps.index(prefix + ".W_s");
  l.b_f = ps.index(prefix + ".b_f");
  l.b_i = ps.index(prefix + ".b_i");
  l.b_o = ps.index(prefix + ".b_o");
  l.b_s = ps.index(prefix + ".b_s");
  l.hidden = ps[l.W_f].rows();
  l.in = ps[l.W_f].cols() - l.hidden;
  return l;
}

void LstmLayer::initialize(ParameterSet& ps, Rng& rng, double forget_bias) const {
  for (std::size_t w : {W_f, W_i, W_o, W_s}) glorot_uniform(ps[w], rng);
  for (std::size_t b : {b_i, b_o, b_s}) ps[b].data.assign(hidden, 0.0);
  ps[b_f].data.assign(hidden, forget_bias);
}

LstmLayer::State LstmLayer::step(Tape& tape, State prev, Var x) const {
  auto gate = [&](std::size_t w, std::size_t b) {
    LinearTerm terms[2] = {{x, w, hidden}, {prev.h, w, 0}};
    return tape.linear({terms, prev.h == kNone ? 1u : 2u}, b);
  };
  const Var f = tape.sigmoid(gate(W_f, b_f));
  const Var i = tape.sigmoid(gate(W_i, b_i));
  const Var o = tape.sigmoid(gate(W_o, b_o));
  const Var g = tape.tanh(gate(W_s, b_s));
  Var s = tape.mul(i, g);
  if (prev.s != kNone) s = tape.add(tape.mul(f, prev.s), s);
  return {tape.mul(o, tape.tanh(s)), s};
}

LstmParams LstmLayer::extract(const ParameterSet& ps) const {
  return {ps[W_f], ps[W_i], ps[W_o], ps[W_s], ps[b_f], ps[b_i], ps[b_o], ps[b_s]};
}

}  // namespace fxh::nn
