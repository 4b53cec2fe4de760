#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "fxh/nn/tensor.hpp"

namespace fxh::nn {

/// Handle to a node on a Tape. Every node holds a (rows x cols) matrix; rows is
/// the batch dimension for everything built by the network layers.
using Var = std::uint32_t;
inline constexpr Var kNone = std::numeric_limits<Var>::max();
inline constexpr std::size_t kNoParam = std::numeric_limits<std::size_t>::max();

/// One x * W[:, off : off + x.cols]^T contribution to a linear node.
struct LinearTerm {
  Var x;
  std::size_t weight;
  std::size_t col_offset = 0;
};

/// Wengert list for reverse-mode differentiation over a fixed ParameterSet.
///
/// The tape never copies parameters; it caches transposed weight matrices, so
/// parameters must not change between clear() calls.
class Tape {
 public:
  explicit Tape(const ParameterSet& params);

  /// Drops every node but keeps allocated storage.
  void clear();

  /// Constant input (no gradient).
  Var input(std::size_t rows, std::size_t cols, std::span<const double> data);
  /// The whole parameter tensor as a (rows x cols) leaf.
  Var parameter(std::size_t id);

  /// bias + sum_terms x W^T; pass kNoParam for no bias.
  Var linear(std::span<const LinearTerm> terms, std::size_t bias);
  Var sigmoid(Var x);
  Var tanh(Var x);
  Var relu(Var x);
  Var mul(Var a, Var b);
  Var add(Var a, Var b);
  /// Per-row inner product: (B x d), (B x d) -> (B x 1).
  Var row_dot(Var a, Var b);
  Var concat_cols(std::span<const Var> parts);
  Var softmax_rows(Var x);
  /// out[r] = sum_j alpha[r, j] * items[j][r]; alpha is (B x J), items are (B x d).
  Var weighted_sum(Var alpha, std::span<const Var> items);
  /// scale * sum (pred - target)^2 as a 1x1 node.
  Var squared_error(Var pred, std::span<const double> target, double scale);
  /// 0.5 * sum x^2 as a 1x1 node.
  Var sum_squares_half(Var x);

  std::size_t rows(Var v) const { return nodes_[v].rows; }
  std::size_t cols(Var v) const { return nodes_[v].cols; }
  std::span<const double> value(Var v) const;
  double scalar(Var v) const { return value(v)[0]; }
  std::size_t node_count() const { return nodes_.size(); }

  /// Accumulates d(loss)/d(parameter) into grads (which must be compatible with the
  /// tape's parameter set). loss must be a 1x1 node.
  void backward(Var loss, ParameterSet& grads);

  /// Hash of the sign pattern of every ReLU input seen since clear(). Two forward
  /// passes with equal patterns lie on the same linear piece of every ReLU.
  std::uint64_t relu_pattern() const { return relu_hash_; }
  /// Smallest |input| seen by any ReLU since clear().
  double relu_margin() const { return relu_margin_; }

 private:
  enum class Op : std::uint8_t {
    input, parameter, linear, sigmoid, tanh, relu, mul, add, row_dot, concat, softmax,
    weighted_sum, squared_error, sum_squares_half,
  };
  struct Node {
    Op op;
    bool needs_grad;
    std::uint32_t rows;
    std::uint32_t cols;
    std::size_t value;  // offset into values_ (unused for parameters)
    Var a = kNone;
    Var b = kNone;
    std::size_t param = kNoParam;
    std::size_t list_begin = 0;  // into terms_, vars_ or targets_
    std::size_t list_size = 0;
    double scale = 0.0;
  };

  Var push(Op op, std::size_t rows, std::size_t cols, bool needs_grad);
  double* mutable_value(Var v) { return values_.data() + nodes_[v].value; }
  double* grad(Var v);
  const double* transposed(std::size_t param);
  void check_same_shape(Var a, Var b, const char* what) const;

  const ParameterSet* params_;
  ParameterSet* grads_ = nullptr;
  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<double> adjoints_;
  std::vector<LinearTerm> terms_;
  std::vector<Var> vars_;
  std::vector<double> targets_;
  std::vector<double> scratch_;
  std::vector<std::vector<double>> transposed_;
  std::vector<bool> transposed_valid_;
  std::uint64_t relu_hash_ = 0;
  double relu_margin_ = std::numeric_limits<double>::infinity();
};

}  // namespace fxh::nn
