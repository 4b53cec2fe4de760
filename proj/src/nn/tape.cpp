#include "fxh/nn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fxh::nn {

namespace {

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// y[0..n) += a * x[0..n)
inline void axpy(std::size_t n, double a, const double* __restrict x, double* __restrict y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

// Four consecutive axpy calls fused into one pass; the per-element addition order
// is unchanged, so results match the unfused sequence exactly.
inline void axpy4(std::size_t n, const double* a, const double* __restrict x0, const double* __restrict x1,
                  const double* __restrict x2, const double* __restrict x3, double* __restrict y) {
  const double a0 = a[0], a1 = a[1], a2 = a[2], a3 = a[3];
  for (std::size_t i = 0; i < n; ++i) {
    double v = y[i];
    v += a0 * x0[i];
    v += a1 * x1[i];
    v += a2 * x2[i];
    v += a3 * x3[i];
    y[i] = v;
  }
}

// y += sum_k a[k] * x[k * stride : k * stride + n] for k = 0..m-1, in k order.
inline void gemv_acc(std::size_t n, std::size_t m, const double* a, const double* x, std::size_t stride,
                     double* y) {
  std::size_t k = 0;
  for (; k + 4 <= m; k += 4)
    axpy4(n, a + k, x + k * stride, x + (k + 1) * stride, x + (k + 2) * stride, x + (k + 3) * stride, y);
  for (; k < m; ++k) axpy(n, a[k], x + k * stride, y);
}

}  // namespace

Tape::Tape(const ParameterSet& params)
    : params_(&params), transposed_(params.size()), transposed_valid_(params.size(), false) {}

void Tape::clear() {
  nodes_.clear();
  values_.clear();
  terms_.clear();
  vars_.clear();
  targets_.clear();
  std::fill(transposed_valid_.begin(), transposed_valid_.end(), false);
  if (transposed_.size() != params_->size()) {
    transposed_.assign(params_->size(), {});
    transposed_valid_.assign(params_->size(), false);
  }
  relu_hash_ = 0;
  relu_margin_ = std::numeric_limits<double>::infinity();
}

Var Tape::push(Op op, std::size_t rows, std::size_t cols, bool needs_grad) {
  Node n;
  n.op = op;
  n.needs_grad = needs_grad;
  n.rows = static_cast<std::uint32_t>(rows);
  n.cols = static_cast<std::uint32_t>(cols);
  n.value = values_.size();
  if (op != Op::parameter) values_.resize(values_.size() + rows * cols, 0.0);
  nodes_.push_back(n);
  return static_cast<Var>(nodes_.size() - 1);
}

std::span<const double> Tape::value(Var v) const {
  const Node& n = nodes_[v];
  if (n.op == Op::parameter) return (*params_)[n.param].data;
  return {values_.data() + n.value, static_cast<std::size_t>(n.rows) * n.cols};
}

double* Tape::grad(Var v) {
  const Node& n = nodes_[v];
  if (n.op == Op::parameter) return (*grads_)[n.param].data.data();
  return adjoints_.data() + n.value;
}

const double* Tape::transposed(std::size_t id) {
  if (!transposed_valid_[id]) {
    const Tensor& w = (*params_)[id];
    const std::size_t r = w.rows();
    const std::size_t c = w.cols();
    auto& t = transposed_[id];
    t.resize(r * c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) t[j * r + i] = w.data[i * c + j];
    transposed_valid_[id] = true;
  }
  return transposed_[id].data();
}

void Tape::check_same_shape(Var a, Var b, const char* what) const {
  if (nodes_[a].rows != nodes_[b].rows || nodes_[a].cols != nodes_[b].cols)
    throw std::invalid_argument(std::string(what) + ": shape mismatch (" + std::to_string(nodes_[a].rows) +
                                "x" + std::to_string(nodes_[a].cols) + " vs " +
                                std::to_string(nodes_[b].rows) + "x" + std::to_string(nodes_[b].cols) + ")");
}

Var Tape::input(std::size_t rows, std::size_t cols, std::span<const double> data) {
  if (data.size() != rows * cols) throw std::invalid_argument("tape input: data size does not match shape");
  const Var v = push(Op::input, rows, cols, false);
  std::copy(data.begin(), data.end(), mutable_value(v));
  return v;
}

Var Tape::parameter(std::size_t id) {
  const Tensor& t = (*params_)[id];
  const Var v = push(Op::parameter, t.rows(), t.cols(), true);
  nodes_[v].param = id;
  return v;
}

Var Tape::linear(std::span<const LinearTerm> terms, std::size_t bias) {
  if (terms.empty()) throw std::invalid_argument("linear: no terms");
  const std::size_t rows = nodes_[terms[0].x].rows;
  const std::size_t out = (*params_)[terms[0].weight].rows();
  for (const auto& t : terms) {
    const Tensor& w = (*params_)[t.weight];
    if (nodes_[t.x].rows != rows || w.rows() != out || t.col_offset + nodes_[t.x].cols > w.cols())
      throw std::invalid_argument("linear: term shape mismatch (weight " + w.shape_string() + ", input " +
                                  std::to_string(nodes_[t.x].rows) + "x" + std::to_string(nodes_[t.x].cols) +
                                  " at column " + std::to_string(t.col_offset) + ")");
  }
  if (bias != kNoParam && (*params_)[bias].size() != out)
    throw std::invalid_argument("linear: bias length does not match output width");

  const Var v = push(Op::linear, rows, out, true);
  nodes_[v].param = bias;
  nodes_[v].list_begin = terms_.size();
  nodes_[v].list_size = terms.size();
  terms_.insert(terms_.end(), terms.begin(), terms.end());

  double* y = mutable_value(v);
  if (bias != kNoParam) {
    const double* b = (*params_)[bias].data.data();
    for (std::size_t r = 0; r < rows; ++r) std::copy(b, b + out, y + r * out);
  }
  for (const auto& t : terms) {
    const double* wt = transposed(t.weight) + t.col_offset * out;
    const double* x = values_.data() + nodes_[t.x].value;
    const std::size_t in = nodes_[t.x].cols;
    for (std::size_t r = 0; r < rows; ++r) gemv_acc(out, in, x + r * in, wt, out, y + r * out);
  }
  return v;
}

Var Tape::sigmoid(Var x) {
  const Var v = push(Op::sigmoid, nodes_[x].rows, nodes_[x].cols, nodes_[x].needs_grad);
  nodes_[v].a = x;
  const double* in = values_.data() + nodes_[x].value;
  double* y = mutable_value(v);
  const std::size_t n = static_cast<std::size_t>(nodes_[v].rows) * nodes_[v].cols;
  for (std::size_t i = 0; i < n; ++i) y[i] = sigmoid_value(in[i]);
  return v;
}

Var Tape::tanh(Var x) {
  const Var v = push(Op::tanh, nodes_[x].rows, nodes_[x].cols, nodes_[x].needs_grad);
  nodes_[v].a = x;
  const double* in = values_.data() + nodes_[x].value;
  double* y = mutable_value(v);
  const std::size_t n = static_cast<std::size_t>(nodes_[v].rows) * nodes_[v].cols;
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(in[i]);
  return v;
}

Var Tape::relu(Var x) {
  const Var v = push(Op::relu, nodes_[x].rows, nodes_[x].cols, nodes_[x].needs_grad);
  nodes_[v].a = x;
  const double* in = values_.data() + nodes_[x].value;
  double* y = mutable_value(v);
  const std::size_t n = static_cast<std::size_t>(nodes_[v].rows) * nodes_[v].cols;
  for (std::size_t i = 0; i < n; ++i) {
    const bool on = in[i] > 0.0;
    y[i] = on ? in[i] : 0.0;
    relu_hash_ = (relu_hash_ ^ (on ? 0x9e3779b97f4a7c15ULL : 0x7f4a7c159e3779b9ULL)) * 0x100000001b3ULL;
    relu_margin_ = std::min(relu_margin_, std::abs(in[i]));
  }
  return v;
}

Var Tape::mul(Var a, Var b) {
  check_same_shape(a, b, "mul");
  const Var v = push(Op::mul, nodes_[a].rows, nodes_[a].cols, nodes_[a].needs_grad || nodes_[b].needs_grad);
  nodes_[v].a = a;
  nodes_[v].b = b;
  const auto va = value(a);
  const auto vb = value(b);
  double* y = mutable_value(v);
  for (std::size_t i = 0; i < va.size(); ++i) y[i] = va[i] * vb[i];
  return v;
}

Var Tape::add(Var a, Var b) {
  check_same_shape(a, b, "add");
  const Var v = push(Op::add, nodes_[a].rows, nodes_[a].cols, nodes_[a].needs_grad || nodes_[b].needs_grad);
  nodes_[v].a = a;
  nodes_[v].b = b;
  const auto va = value(a);
  const auto vb = value(b);
  double* y = mutable_value(v);
  for (std::size_t i = 0; i < va.size(); ++i) y[i] = va[i] + vb[i];
  return v;
}

Var Tape::row_dot(Var a, Var b) {
  check_same_shape(a, b, "row_dot");
  const std::size_t rows = nodes_[a].rows;
  const std::size_t d = nodes_[a].cols;
  const Var v = push(Op::row_dot, rows, 1, nodes_[a].needs_grad || nodes_[b].needs_grad);
  nodes_[v].a = a;
  nodes_[v].b = b;
  const auto va = value(a);
  const auto vb = value(b);
  double* y = mutable_value(v);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += va[r * d + k] * vb[r * d + k];
    y[r] = s;
  }
  return v;
}

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t rows = nodes_[parts[0]].rows;
  std::size_t cols = 0;
  bool needs = false;
  for (Var p : parts) {
    if (nodes_[p].rows != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += nodes_[p].cols;
    needs = needs || nodes_[p].needs_grad;
  }
  const Var v = push(Op::concat, rows, cols, needs);
  nodes_[v].list_begin = vars_.size();
  nodes_[v].list_size = parts.size();
  vars_.insert(vars_.end(), parts.begin(), parts.end());
  double* y = mutable_value(v);
  std::size_t off = 0;
  for (Var p : parts) {
    const std::size_t c = nodes_[p].cols;
    const auto vp = value(p);
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(vp.begin() + static_cast<std::ptrdiff_t>(r * c),
                vp.begin() + static_cast<std::ptrdiff_t>((r + 1) * c), y + r * cols + off);
    off += c;
  }
  return v;
}

Var Tape::softmax_rows(Var x) {
  const std::size_t rows = nodes_[x].rows;
  const std::size_t cols = nodes_[x].cols;
  const Var v = push(Op::softmax, rows, cols, nodes_[x].needs_grad);
  nodes_[v].a = x;
  const auto in = value(x);
  double* y = mutable_value(v);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = in.data() + r * cols;
    double* yr = y + r * cols;
    const double m = *std::max_element(xr, xr + cols);
    double sum = 0.0;
    for (std::size_t k = 0; k < cols; ++k) {
      yr[k] = std::exp(xr[k] - m);
      sum += yr[k];
    }
    for (std::size_t k = 0; k < cols; ++k) yr[k] /= sum;
  }
  return v;
}

Var Tape::weighted_sum(Var alpha, std::span<const Var> items) {
  const std::size_t rows = nodes_[alpha].rows;
  if (items.size() != nodes_[alpha].cols) throw std::invalid_argument("weighted_sum: weight count mismatch");
  if (items.empty()) throw std::invalid_argument("weighted_sum: no items");
  const std::size_t d = nodes_[items[0]].cols;
  bool needs = nodes_[alpha].needs_grad;
  for (Var it : items) {
    if (nodes_[it].rows != rows || nodes_[it].cols != d)
      throw std::invalid_argument("weighted_sum: item shape mismatch");
    needs = needs || nodes_[it].needs_grad;
  }
  const Var v = push(Op::weighted_sum, rows, d, needs);
  nodes_[v].a = alpha;
  nodes_[v].list_begin = vars_.size();
  nodes_[v].list_size = items.size();
  vars_.insert(vars_.end(), items.begin(), items.end());
  const auto al = value(alpha);
  double* y = mutable_value(v);
  const std::size_t J = items.size();
  for (std::size_t j = 0; j < J; ++j) {
    const auto vi = value(items[j]);
    for (std::size_t r = 0; r < rows; ++r) axpy(d, al[r * J + j], vi.data() + r * d, y + r * d);
  }
  return v;
}

Var Tape::squared_error(Var pred, std::span<const double> target, double scale) {
  const std::size_t n = static_cast<std::size_t>(nodes_[pred].rows) * nodes_[pred].cols;
  if (target.size() != n) throw std::invalid_argument("squared_error: target length mismatch");
  const Var v = push(Op::squared_error, 1, 1, nodes_[pred].needs_grad);
  nodes_[v].a = pred;
  nodes_[v].scale = scale;
  nodes_[v].list_begin = targets_.size();
  nodes_[v].list_size = n;
  targets_.insert(targets_.end(), target.begin(), target.end());
  const auto p = value(pred);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = p[i] - target[i];
    s += e * e;
  }
  *mutable_value(v) = scale * s;
  return v;
}

Var Tape::sum_squares_half(Var x) {
  const Var v = push(Op::sum_squares_half, 1, 1, nodes_[x].needs_grad);
  nodes_[v].a = x;
  double s = 0.0;
  for (double e : value(x)) s += e * e;
  *mutable_value(v) = 0.5 * s;
  return v;
}

void Tape::backward(Var loss, ParameterSet& grads) {
  if (nodes_[loss].rows != 1 || nodes_[loss].cols != 1) throw std::invalid_argument("backward: loss must be 1x1");
  if (!grads.compatible_with(*params_)) throw std::invalid_argument("backward: gradient set incompatible");
  grads_ = &grads;
  adjoints_.assign(values_.size(), 0.0);
  *grad(loss) = 1.0;

  for (Var v = loss + 1; v-- > 0;) {
    const Node& n = nodes_[v];
    if (!n.needs_grad || n.op == Op::input || n.op == Op::parameter) continue;
    const std::size_t size = static_cast<std::size_t>(n.rows) * n.cols;
    const double* dy = adjoints_.data() + n.value;
    const double* y = values_.data() + n.value;

    switch (n.op) {
      case Op::linear: {
        const std::size_t rows = n.rows;
        const std::size_t out = n.cols;
        if (n.param != kNoParam) {
          double* db = (*grads_)[n.param].data.data();
          for (std::size_t r = 0; r < rows; ++r) axpy(out, 1.0, dy + r * out, db);
        }
        for (std::size_t t = 0; t < n.list_size; ++t) {
          const LinearTerm term = terms_[n.list_begin + t];
          const Tensor& w = (*params_)[term.weight];
          const std::size_t wc = w.cols();
          const std::size_t in = nodes_[term.x].cols;
          const auto x = value(term.x);
          double* dw = (*grads_)[term.weight].data.data();
          // dW[o] += sum_r dy[r, o] x[r], accumulated in r order.
          std::vector<double>& col = scratch_;
          col.resize(rows);
          for (std::size_t o = 0; o < out; ++o) {
            for (std::size_t r = 0; r < rows; ++r) col[r] = dy[r * out + o];
            gemv_acc(in, rows, col.data(), x.data(), in, dw + o * wc + term.col_offset);
          }
          if (nodes_[term.x].needs_grad) {
            double* dx = grad(term.x);
            for (std::size_t r = 0; r < rows; ++r)
              gemv_acc(in, out, dy + r * out, w.data.data() + term.col_offset, wc, dx + r * in);
          }
        }
        break;
      }
      case Op::sigmoid: {
        double* dx = grad(n.a);
        for (std::size_t i = 0; i < size; ++i) dx[i] += dy[i] * y[i] * (1.0 - y[i]);
        break;
      }
      case Op::tanh: {
        double* dx = grad(n.a);
        for (std::size_t i = 0; i < size; ++i) dx[i] += dy[i] * (1.0 - y[i] * y[i]);
        break;
      }
      case Op::relu: {
        double* dx = grad(n.a);
        const auto x = value(n.a);
        for (std::size_t i = 0; i < size; ++i)
          if (x[i] > 0.0) dx[i] += dy[i];
        break;
      }
      case Op::mul: {
        const auto a = value(n.a);
        const auto b = value(n.b);
        if (nodes_[n.a].needs_grad) {
          double* da = grad(n.a);
          for (std::size_t i = 0; i < size; ++i) da[i] += dy[i] * b[i];
        }
        if (nodes_[n.b].needs_grad) {
          double* db = grad(n.b);
          for (std::size_t i = 0; i < size; ++i) db[i] += dy[i] * a[i];
        }
        break;
      }
      case Op::add: {
        if (nodes_[n.a].needs_grad) axpy(size, 1.0, dy, grad(n.a));
        if (nodes_[n.b].needs_grad) axpy(size, 1.0, dy, grad(n.b));
        break;
      }
      case Op::row_dot: {
        const std::size_t d = nodes_[n.a].cols;
        const auto a = value(n.a);
        const auto b = value(n.b);
        if (nodes_[n.a].needs_grad) {
          double* da = grad(n.a);
          for (std::size_t r = 0; r < n.rows; ++r) axpy(d, dy[r], b.data() + r * d, da + r * d);
        }
        if (nodes_[n.b].needs_grad) {
          double* db = grad(n.b);
          for (std::size_t r = 0; r < n.rows; ++r) axpy(d, dy[r], a.data() + r * d, db + r * d);
        }
        break;
      }
      case Op::concat: {
        std::size_t off = 0;
        for (std::size_t p = 0; p < n.list_size; ++p) {
          const Var part = vars_[n.list_begin + p];
          const std::size_t c = nodes_[part].cols;
          if (nodes_[part].needs_grad) {
            double* dp = grad(part);
            for (std::size_t r = 0; r < n.rows; ++r) axpy(c, 1.0, dy + r * n.cols + off, dp + r * c);
          }
          off += c;
        }
        break;
      }
      case Op::softmax: {
        double* dx = grad(n.a);
        for (std::size_t r = 0; r < n.rows; ++r) {
          const double* yr = y + r * n.cols;
          const double* gr = dy + r * n.cols;
          double dot = 0.0;
          for (std::size_t k = 0; k < n.cols; ++k) dot += gr[k] * yr[k];
          for (std::size_t k = 0; k < n.cols; ++k) dx[r * n.cols + k] += yr[k] * (gr[k] - dot);
        }
        break;
      }
      case Op::weighted_sum: {
        const std::size_t J = n.list_size;
        const std::size_t d = n.cols;
        const auto al = value(n.a);
        double* dal = nodes_[n.a].needs_grad ? grad(n.a) : nullptr;
        for (std::size_t j = 0; j < J; ++j) {
          const Var item = vars_[n.list_begin + j];
          const auto vi = value(item);
          double* di = nodes_[item].needs_grad ? grad(item) : nullptr;
          for (std::size_t r = 0; r < n.rows; ++r) {
            if (dal) {
              double s = 0.0;
              for (std::size_t k = 0; k < d; ++k) s += dy[r * d + k] * vi[r * d + k];
              dal[r * J + j] += s;
            }
            if (di) axpy(d, al[r * J + j], dy + r * d, di + r * d);
          }
        }
        break;
      }
      case Op::squared_error: {
        double* dp = grad(n.a);
        const auto p = value(n.a);
        const double g = 2.0 * n.scale * dy[0];
        for (std::size_t i = 0; i < n.list_size; ++i) dp[i] += g * (p[i] - targets_[n.list_begin + i]);
        break;
      }
      case Op::sum_squares_half: {
        double* dx = grad(n.a);
        const auto x = value(n.a);
        for (std::size_t i = 0; i < x.size(); ++i) dx[i] += dy[0] * x[i];
        break;
      }
      case Op::input:
      case Op::parameter:
        break;
    }
  }
  grads_ = nullptr;
}

}  // namespace fxh::nn
