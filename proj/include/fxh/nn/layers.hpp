#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fxh/nn/tape.hpp"
#include "fxh/nn/tensor.hpp"

namespace fxh::nn {

enum class Activation { identity, relu, tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// Value-level cells. These evaluate one step directly on tensors and serve as
// the reference for the tape-built layers below.

struct LstmParams {
  Tensor W_f, W_i, W_o, W_s;  ///< (hidden, hidden + input), acting on [h_prev; x]
  Tensor b_f, b_i, b_o, b_s;  ///< (hidden)

  std::size_t hidden() const { return W_f.rows(); }
  std::size_t input() const { return W_f.cols() - W_f.rows(); }
  static LstmParams zeros(std::size_t hidden, std::size_t input);
};

struct RnnParams {
  Tensor W_hh;  ///< (hidden, hidden)
  Tensor W_xh;  ///< (hidden, input)
  Tensor bias;  ///< (hidden); empty tensor for the bias-free cell

  static RnnParams zeros(std::size_t hidden, std::size_t input, bool with_bias = true);
};

struct DenseParams {
  Tensor W;  ///< (out, in)
  Tensor b;  ///< (out)
  Activation activation = Activation::identity;
};

struct LstmOutput {
  std::vector<double> h;
  std::vector<double> s;
};

/// f = sig(W_f[h;x]+b_f), i = sig(W_i[h;x]+b_i), o = sig(W_o[h;x]+b_o),
/// s = f*s_prev + i*tanh(W_s[h;x]+b_s), h = o*tanh(s).
LstmOutput lstm_step(const LstmParams& p, std::span<const double> h_prev, std::span<const double> s_prev,
                     std::span<const double> x);
/// h = tanh(W_hh h_prev + W_xh x + bias).
std::vector<double> rnn_step(const RnnParams& p, std::span<const double> h_prev, std::span<const double> x);
std::vector<double> dense_forward(const DenseParams& p, std::span<const double> x);
/// Max-subtracted softmax. Throws std::invalid_argument on empty input.
std::vector<double> softmax(std::span<const double> scores);

// ---------------------------------------------------------------------------
// Tape layers. Each layer stores indices into a ParameterSet; create() registers
// zero tensors under "<prefix>.<name>", bind() finds existing ones.

struct DenseLayer {
  std::size_t W = kNoParam;
  std::size_t b = kNoParam;
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::identity;

  static DenseLayer create(ParameterSet& ps, const std::string& prefix, std::size_t in, std::size_t out,
                           Activation act);
  static DenseLayer bind(const ParameterSet& ps, const std::string& prefix, Activation act);
  void initialize(ParameterSet& ps, Rng& rng) const;
  Var forward(Tape& tape, Var x) const;
};

struct RnnLayer {
  std::size_t W_hh = kNoParam;
  std::size_t W_xh = kNoParam;
  std::size_t bias = kNoParam;  ///< kNoParam for the bias-free cell
  std::size_t hidden = 0;
  std::size_t in = 0;

  static RnnLayer create(ParameterSet& ps, const std::string& prefix, std::size_t in, std::size_t hidden,
                         bool with_bias);
  static RnnLayer bind(const ParameterSet& ps, const std::string& prefix);
  void initialize(ParameterSet& ps, Rng& rng) const;
  /// h_prev == kNone means the zero state.
  Var step(Tape& tape, Var h_prev, Var x) const;
};

struct LstmLayer {
  std::size_t W_f = kNoParam, W_i = kNoParam, W_o = kNoParam, W_s = kNoParam;
  std::size_t b_f = kNoParam, b_i = kNoParam, b_o = kNoParam, b_s = kNoParam;
  std::size_t hidden = 0;
  std::size_t in = 0;

  struct State {
    Var h = kNone;  ///< kNone means zero
    Var s = kNone;
  };

  static LstmLayer create(ParameterSet& ps, const std::string& prefix, std::size_t in, std::size_t hidden);
  static LstmLayer bind(const ParameterSet& ps, const std::string& prefix);
  void initialize(ParameterSet& ps, Rng& rng, double forget_bias) const;
  State step(Tape& tape, State prev, Var x) const;
  LstmParams extract(const ParameterSet& ps) const;
};

}  // namespace fxh::nn
