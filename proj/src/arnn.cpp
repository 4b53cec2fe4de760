#include "fxh/arnn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fxh/errors.hpp"
#include "fxh/nn/optimizer.hpp"

#ifdef FXH_HAVE_OPENMP
#include <omp.h>
#endif

namespace fxh {

using nn::kNone;
using nn::Tape;
using nn::Var;

namespace {

int max_threads() {
#ifdef FXH_HAVE_OPENMP
  return std::max(1, omp_get_max_threads());
#else
  return 1;
#endif
}

int thread_id() {
#ifdef FXH_HAVE_OPENMP
  return omp_get_thread_num();
#else
  return 0;
#endif
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

std::vector<std::size_t> split_sizes_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    const unsigned long v = std::stoul(item, &pos);
    if (pos != item.size()) throw std::invalid_argument("bad integer list '" + s + "'");
    out.push_back(v);
  }
  return out;
}

struct Trace {
  std::vector<Var> enc;
  std::vector<Var> dec;
  std::vector<Var> alpha;
};

}  // namespace

// Parameter indices of every layer, in declaration order. Declaration order is
// also initialization order and serialization order.
struct NetworkLayout {
  ArnnArchitecture arch;
  std::vector<nn::RnnLayer> enc_rnn;
  nn::DenseLayer enc_proj;
  std::vector<nn::LstmLayer> dec_lstm;
  nn::DenseLayer dec_proj;
  nn::LstmLayer head_lstm;
  std::vector<nn::RnnLayer> stack_rnn;
  std::vector<nn::LstmLayer> stack_lstm;
  std::vector<nn::DenseLayer> dense;

  static NetworkLayout declare(const ArnnArchitecture& arch, nn::ParameterSet& ps) {
    arch.validate();
    NetworkLayout L;
    L.arch = arch;
    std::size_t in = 0;
    switch (arch.kind) {
      case NetworkKind::arnn: {
        in = arch.n_features;
        for (std::size_t l = 0; l < arch.encoder_layers.size(); ++l) {
          L.enc_rnn.push_back(nn::RnnLayer::create(ps, "enc.rnn" + std::to_string(l), in, arch.encoder_layers[l],
                                                   arch.rnn_bias));
          in = arch.encoder_layers[l];
        }
        L.enc_proj = nn::DenseLayer::create(ps, "enc.proj", in, arch.step_feature_dim, nn::Activation::relu);
        in = arch.n_exo;
        for (std::size_t l = 0; l < arch.decoder_layers.size(); ++l) {
          L.dec_lstm.push_back(nn::LstmLayer::create(ps, "dec.lstm" + std::to_string(l), in, arch.decoder_layers[l]));
          in = arch.decoder_layers[l];
        }
        L.dec_proj = nn::DenseLayer::create(ps, "dec.proj", in, arch.step_feature_dim, nn::Activation::relu);
        L.head_lstm = nn::LstmLayer::create(ps, "head.lstm", arch.step_feature_dim, arch.head_rnn_width);
        in = arch.head_rnn_width;
        break;
      }
      case NetworkKind::rnn:
        in = arch.n_features + arch.n_exo;
        for (std::size_t l = 0; l < arch.encoder_layers.size(); ++l) {
          L.stack_rnn.push_back(nn::RnnLayer::create(ps, "stack.rnn" + std::to_string(l), in, arch.encoder_layers[l],
                                                     arch.rnn_bias));
          in = arch.encoder_layers[l];
        }
        break;
      case NetworkKind::lstm:
        in = arch.n_features + arch.n_exo;
        for (std::size_t l = 0; l < arch.decoder_layers.size(); ++l) {
          L.stack_lstm.push_back(
              nn::LstmLayer::create(ps, "stack.lstm" + std::to_string(l), in, arch.decoder_layers[l]));
          in = arch.decoder_layers[l];
        }
        break;
    }
    for (std::size_t k = 0; k < arch.head_dense.size(); ++k) {
      const auto act = k + 1 < arch.head_dense.size() ? nn::Activation::relu : nn::Activation::identity;
      L.dense.push_back(nn::DenseLayer::create(ps, "head.dense" + std::to_string(k), in, arch.head_dense[k], act));
      in = arch.head_dense[k];
    }
    return L;
  }

  void initialize(nn::ParameterSet& ps, nn::Rng& rng, double forget_bias) const {
    for (const auto& l : enc_rnn) l.initialize(ps, rng);
    if (arch.kind == NetworkKind::arnn) enc_proj.initialize(ps, rng);
    for (const auto& l : dec_lstm) l.initialize(ps, rng, forget_bias);
    if (arch.kind == NetworkKind::arnn) {
      dec_proj.initialize(ps, rng);
      head_lstm.initialize(ps, rng, forget_bias);
    }
    for (const auto& l : stack_rnn) l.initialize(ps, rng);
    for (const auto& l : stack_lstm) l.initialize(ps, rng, forget_bias);
    for (const auto& l : dense) l.initialize(ps, rng);
  }

  std::vector<Var> encoder(Tape& tape, std::span<const Var> xs) const {
    std::vector<Var> h(enc_rnn.size(), kNone);
    std::vector<Var> out;
    out.reserve(xs.size());
    for (Var x : xs) {
      Var in = x;
      for (std::size_t l = 0; l < enc_rnn.size(); ++l) in = h[l] = enc_rnn[l].step(tape, h[l], in);
      out.push_back(enc_proj.forward(tape, in));
    }
    return out;
  }

  std::vector<Var> decoder(Tape& tape, std::span<const Var> zs) const {
    std::vector<nn::LstmLayer::State> st(dec_lstm.size());
    std::vector<Var> out;
    out.reserve(zs.size());
    for (Var z : zs) {
      Var in = z;
      for (std::size_t l = 0; l < dec_lstm.size(); ++l) {
        st[l] = dec_lstm[l].step(tape, st[l], in);
        in = st[l].h;
      }
      out.push_back(dec_proj.forward(tape, in));
    }
    return out;
  }

  Var dense_head(Tape& tape, Var in) const {
    for (const auto& d : dense) in = d.forward(tape, in);
    return in;
  }

  Var forward(Tape& tape, std::span<const Var> xs, std::span<const Var> zs, Trace* trace) const {
    if (arch.kind == NetworkKind::rnn || arch.kind == NetworkKind::lstm) {
      std::vector<Var> h(stack_rnn.size(), kNone);
      std::vector<nn::LstmLayer::State> st(stack_lstm.size());
      Var top = kNone;
      for (std::size_t t = 0; t < xs.size(); ++t) {
        const Var parts[2] = {xs[t], zs[t]};
        Var in = tape.concat_cols(parts);
        for (std::size_t l = 0; l < stack_rnn.size(); ++l) in = h[l] = stack_rnn[l].step(tape, h[l], in);
        for (std::size_t l = 0; l < stack_lstm.size(); ++l) {
          st[l] = stack_lstm[l].step(tape, st[l], in);
          in = st[l].h;
        }
        top = in;
      }
      return dense_head(tape, top);
    }

    const std::vector<Var> enc = encoder(tape, xs);
    const std::vector<Var> dec = decoder(tape, zs);
    nn::LstmLayer::State head;
    std::vector<Var> scores(enc.size());
    for (std::size_t i = 0; i < dec.size(); ++i) {
      for (std::size_t j = 0; j < enc.size(); ++j) scores[j] = tape.row_dot(dec[i], enc[j]);
      const Var alpha = tape.softmax_rows(tape.concat_cols(scores));
      const Var context = tape.weighted_sum(alpha, enc);
      const Var fused = tape.mul(dec[i], context);
      head = head_lstm.step(tape, head, fused);
      if (trace) trace->alpha.push_back(alpha);
    }
    if (trace) {
      trace->enc = enc;
      trace->dec = dec;
    }
    return dense_head(tape, head.h);
  }
};

struct ArnnKernel::Layout : NetworkLayout {};

namespace {

NetworkLayout bound_layout(const ArnnWeights& w) {
  nn::ParameterSet expected;
  NetworkLayout L = NetworkLayout::declare(w.arch, expected);
  if (!expected.compatible_with(w.params))
    throw std::invalid_argument("weights do not match the declared architecture");
  return L;
}

Matrix to_matrix(const Tape& tape, std::span<const Var> rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : tape.cols(rows[0]));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto v = tape.value(rows[r]);
    std::copy(v.begin(), v.end(), m.row(r).begin());
  }
  return m;
}

// Gathers step t of every selected window into a (B x width) tape input.
std::vector<Var> gather_steps(Tape& tape, const WindowedDataset& data, std::span<const std::size_t> idx,
                              bool exogenous, std::vector<double>& buf) {
  const std::size_t T = data.window;
  const std::size_t width = exogenous ? data.n_exo : data.n_features;
  std::vector<Var> out(T);
  buf.resize(idx.size() * width);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const auto win = exogenous ? data.z_window(idx[b]) : data.x_window(idx[b]);
      std::copy_n(win.begin() + static_cast<std::ptrdiff_t>(t * width), width,
                  buf.begin() + static_cast<std::ptrdiff_t>(b * width));
    }
    out[t] = tape.input(idx.size(), width, buf);
  }
  return out;
}

void check_dataset(const ArnnArchitecture& arch, const WindowedDataset& data) {
  if (data.window != arch.T || data.n_features != arch.n_features || data.n_exo != arch.n_exo)
    throw std::invalid_argument("dataset windows (T=" + std::to_string(data.window) +
                                ", features=" + std::to_string(data.n_features) +
                                ", exogenous=" + std::to_string(data.n_exo) +
                                ") do not match the architecture (T=" + std::to_string(arch.T) +
                                ", features=" + std::to_string(arch.n_features) +
                                ", exogenous=" + std::to_string(arch.n_exo) + ")");
}

constexpr std::size_t kPredictChunk = 64;

}  // namespace

std::string to_string(NetworkKind k) {
  switch (k) {
    case NetworkKind::arnn: return "arnn";
    case NetworkKind::rnn: return "rnn";
    case NetworkKind::lstm: return "lstm";
  }
  return "arnn";
}

NetworkKind network_kind_from_string(const std::string& s) {
  if (s == "arnn") return NetworkKind::arnn;
  if (s == "rnn") return NetworkKind::rnn;
  if (s == "lstm") return NetworkKind::lstm;
  throw std::invalid_argument("unknown network kind '" + s + "' (expected arnn, rnn or lstm)");
}

void ArnnArchitecture::validate() const {
  auto positive = [](const std::vector<std::size_t>& v) {
    return !v.empty() && std::all_of(v.begin(), v.end(), [](std::size_t x) { return x > 0; });
  };
  if (T < 1) throw std::invalid_argument("architecture: T must be >= 1");
  if (n_features < 1 || n_exo < 1) throw std::invalid_argument("architecture: input widths must be >= 1");
  if (!positive(head_dense) || head_dense.back() != 1)
    throw std::invalid_argument("architecture: head_dense must be positive widths ending in 1");
  if ((kind == NetworkKind::arnn || kind == NetworkKind::rnn) && !positive(encoder_layers))
    throw std::invalid_argument("architecture: encoder_layers must be non-empty positive widths");
  if ((kind == NetworkKind::arnn || kind == NetworkKind::lstm) && !positive(decoder_layers))
    throw std::invalid_argument("architecture: decoder_layers must be non-empty positive widths");
  if (kind == NetworkKind::arnn && (step_feature_dim < 1 || head_rnn_width < 1))
    throw std::invalid_argument("architecture: step_feature_dim and head_rnn_width must be >= 1");
}

std::string ArnnArchitecture::descriptor() const {
  std::ostringstream os;
  os << "kind=" << to_string(kind) << "\n"
     << "T=" << T << "\n"
     << "encoder_layers=" << join(encoder_layers) << "\n"
     << "decoder_layers=" << join(decoder_layers) << "\n"
     << "step_feature_dim=" << step_feature_dim << "\n"
     << "head_rnn_width=" << head_rnn_width << "\n"
     << "head_dense=" << join(head_dense) << "\n"
     << "n_features=" << n_features << "\n"
     << "n_exo=" << n_exo << "\n"
     << "rnn_bias=" << (rnn_bias ? 1 : 0) << "\n";
  return os.str();
}

ArnnArchitecture ArnnArchitecture::from_descriptor(const std::string& text) {
  ArnnArchitecture a;
  std::istringstream is(text);
  std::string line;
  std::size_t seen = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("architecture descriptor: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    ++seen;
    if (key == "kind") a.kind = network_kind_from_string(val);
    else if (key == "T") a.T = std::stoul(val);
    else if (key == "encoder_layers") a.encoder_layers = split_sizes_list(val);
    else if (key == "decoder_layers") a.decoder_layers = split_sizes_list(val);
    else if (key == "step_feature_dim") a.step_feature_dim = std::stoul(val);
    else if (key == "head_rnn_width") a.head_rnn_width = std::stoul(val);
    else if (key == "head_dense") a.head_dense = split_sizes_list(val);
    else if (key == "n_features") a.n_features = std::stoul(val);
    else if (key == "n_exo") a.n_exo = std::stoul(val);
    else if (key == "rnn_bias") a.rnn_bias = val == "1";
    else throw std::invalid_argument("architecture descriptor: unknown key '" + key + "'");
  }
  if (seen != 10) throw std::invalid_argument("architecture descriptor: expected 10 keys, found " + std::to_string(seen));
  a.validate();
  return a;
}

nn::ParameterSet parameter_layout(const ArnnArchitecture& arch) {
  nn::ParameterSet ps;
  NetworkLayout::declare(arch, ps);
  return ps;
}

ArnnWeights initialize_weights(const ArnnArchitecture& arch, std::uint64_t seed, double forget_bias) {
  ArnnWeights w;
  w.arch = arch;
  const NetworkLayout L = NetworkLayout::declare(arch, w.params);
  nn::Rng rng(seed);
  L.initialize(w.params, rng, forget_bias);
  w.meta.seed = seed;
  return w;
}

Matrix encode(const ArnnWeights& w, std::span<const double> x_window) {
  if (w.arch.kind != NetworkKind::arnn) throw std::invalid_argument("encode: not an attention network");
  if (x_window.size() != w.arch.T * w.arch.n_features)
    throw std::invalid_argument("encode: window must be T x n_features");
  const NetworkLayout L = bound_layout(w);
  Tape tape(w.params);
  std::vector<Var> xs;
  for (std::size_t t = 0; t < w.arch.T; ++t)
    xs.push_back(tape.input(1, w.arch.n_features, x_window.subspan(t * w.arch.n_features, w.arch.n_features)));
  return to_matrix(tape, L.encoder(tape, xs));
}

Matrix decode(const ArnnWeights& w, std::span<const double> z_window) {
  if (w.arch.kind != NetworkKind::arnn) throw std::invalid_argument("decode: not an attention network");
  if (z_window.size() != w.arch.T * w.arch.n_exo) throw std::invalid_argument("decode: window must be T x n_exo");
  const NetworkLayout L = bound_layout(w);
  Tape tape(w.params);
  std::vector<Var> zs;
  for (std::size_t t = 0; t < w.arch.T; ++t)
    zs.push_back(tape.input(1, w.arch.n_exo, z_window.subspan(t * w.arch.n_exo, w.arch.n_exo)));
  return to_matrix(tape, L.decoder(tape, zs));
}

AttentionResult attend(const Matrix& enc, const Matrix& dec) {
  if (enc.cols != dec.cols) throw std::invalid_argument("attend: state widths differ");
  if (enc.rows == 0 || dec.rows == 0) throw std::invalid_argument("attend: empty state sequence");
  AttentionResult r{Matrix(dec.rows, dec.cols), Matrix(dec.rows, enc.rows)};
  std::vector<double> scores(enc.rows);
  for (std::size_t i = 0; i < dec.rows; ++i) {
    for (std::size_t j = 0; j < enc.rows; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < enc.cols; ++k) s += dec(i, k) * enc(j, k);
      scores[j] = s;
    }
    const auto alpha = nn::softmax(scores);
    std::copy(alpha.begin(), alpha.end(), r.alpha.row(i).begin());
    for (std::size_t k = 0; k < enc.cols; ++k) {
      double c = 0.0;
      for (std::size_t j = 0; j < enc.rows; ++j) c += alpha[j] * enc(j, k);
      r.fused(i, k) = dec(i, k) * c;
    }
  }
  return r;
}

double predict(const ArnnWeights& w, std::span<const double> x_window, std::span<const double> z_window) {
  if (x_window.size() != w.arch.T * w.arch.n_features || z_window.size() != w.arch.T * w.arch.n_exo)
    throw std::invalid_argument("predict: window shapes do not match the architecture");
  const NetworkLayout L = bound_layout(w);
  Tape tape(w.params);
  std::vector<Var> xs;
  std::vector<Var> zs;
  for (std::size_t t = 0; t < w.arch.T; ++t) {
    xs.push_back(tape.input(1, w.arch.n_features, x_window.subspan(t * w.arch.n_features, w.arch.n_features)));
    zs.push_back(tape.input(1, w.arch.n_exo, z_window.subspan(t * w.arch.n_exo, w.arch.n_exo)));
  }
  return tape.scalar(L.forward(tape, xs, zs, nullptr));
}

// ---------------------------------------------------------------------------

ArnnKernel::ArnnKernel(const ArnnWeights& w, std::size_t chunk)
    : weights_(&w), chunk_(chunk), layout_(std::make_shared<Layout>(Layout{bound_layout(w)})) {
  if (chunk_ < 1) throw std::invalid_argument("ArnnKernel: chunk must be >= 1");
}

void ArnnKernel::ensure_tapes() {
  const auto n = static_cast<std::size_t>(max_threads());
  while (tapes_.size() < n) tapes_.push_back(std::make_unique<Tape>(weights_->params));
}

double ArnnKernel::loss_and_gradient(const WindowedDataset& data, std::span<const std::size_t> indices,
                                     nn::ParameterSet& grads, Execution exec) {
  check_dataset(weights_->arch, data);
  if (indices.empty()) throw std::invalid_argument("loss_and_gradient: empty batch");
  if (!grads.compatible_with(weights_->params)) throw std::invalid_argument("loss_and_gradient: bad gradient set");
  ensure_tapes();
  const std::size_t n_chunks = (indices.size() + chunk_ - 1) / chunk_;
  while (chunk_grads_.size() < n_chunks) chunk_grads_.push_back(weights_->params.zeros_like());
  chunk_loss_.assign(n_chunks, 0.0);
  const double scale = 1.0 / static_cast<double>(indices.size());

  auto run = [&](std::size_t c) {
    Tape& tape = *tapes_[static_cast<std::size_t>(thread_id())];
    const std::size_t begin = c * chunk_;
    const auto idx = indices.subspan(begin, std::min(chunk_, indices.size() - begin));
    std::vector<double> buf;
    tape.clear();
    const auto xs = gather_steps(tape, data, idx, false, buf);
    const auto zs = gather_steps(tape, data, idx, true, buf);
    const Var pred = layout_->forward(tape, xs, zs, nullptr);
    std::vector<double> target(idx.size());
    for (std::size_t b = 0; b < idx.size(); ++b) target[b] = data.y[idx[b]];
    const Var loss = tape.squared_error(pred, target, scale);
    chunk_grads_[c].set_zero();
    tape.backward(loss, chunk_grads_[c]);
    chunk_loss_[c] = tape.scalar(loss);
  };

  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_chunks); ++c) run(static_cast<std::size_t>(c));
  } else {
    for (std::size_t c = 0; c < n_chunks; ++c) run(c);
  }

  grads.set_zero();
  double total = 0.0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    grads.accumulate(chunk_grads_[c]);
    total += chunk_loss_[c];
  }
  return total;
}

std::vector<double> ArnnKernel::predict(const WindowedDataset& data, Execution exec) {
  check_dataset(weights_->arch, data);
  ensure_tapes();
  std::vector<double> out(data.samples);
  const std::size_t n_chunks = (data.samples + kPredictChunk - 1) / kPredictChunk;

  auto run = [&](std::size_t c) {
    Tape& tape = *tapes_[static_cast<std::size_t>(thread_id())];
    const std::size_t begin = c * kPredictChunk;
    const std::size_t n = std::min(kPredictChunk, data.samples - begin);
    std::vector<std::size_t> idx(n);
    for (std::size_t b = 0; b < n; ++b) idx[b] = begin + b;
    std::vector<double> buf;
    tape.clear();
    const auto xs = gather_steps(tape, data, idx, false, buf);
    const auto zs = gather_steps(tape, data, idx, true, buf);
    const auto v = tape.value(layout_->forward(tape, xs, zs, nullptr));
    std::copy(v.begin(), v.end(), out.begin() + static_cast<std::ptrdiff_t>(begin));
  };

  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_chunks); ++c) run(static_cast<std::size_t>(c));
  } else {
    for (std::size_t c = 0; c < n_chunks; ++c) run(c);
  }
  return out;
}

double ArnnKernel::mean_squared_error(const WindowedDataset& data, Execution exec) {
  if (data.samples == 0) throw std::invalid_argument("mean_squared_error: empty dataset");
  const auto pred = predict(data, exec);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - data.y[i];
    s += e * e;
  }
  return s / static_cast<double>(pred.size());
}

nn::LossEvaluation ArnnKernel::evaluate_loss(const nn::ParameterSet& params, const WindowedDataset& data,
                                             std::span<const std::size_t> indices) const {
  check_dataset(weights_->arch, data);
  if (!params.compatible_with(weights_->params)) throw std::invalid_argument("evaluate_loss: bad parameter set");
  Tape tape(params);
  std::vector<double> buf;
  const auto xs = gather_steps(tape, data, indices, false, buf);
  const auto zs = gather_steps(tape, data, indices, true, buf);
  const Var pred = layout_->forward(tape, xs, zs, nullptr);
  std::vector<double> target(indices.size());
  for (std::size_t b = 0; b < indices.size(); ++b) target[b] = data.y[indices[b]];
  const double scale = 1.0 / static_cast<double>(indices.size());
  const Var loss = tape.squared_error(pred, target, scale);
  const auto out = tape.value(pred);
  return {tape.scalar(loss), tape.relu_pattern(), {out.begin(), out.end()}, std::move(target), scale};
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning_rate must be positive");
  if (grad_chunk < 1) throw std::invalid_argument("grad_chunk must be >= 1");
}

ArnnWeights train(const WindowedDataset& train_set, const WindowedDataset& val_set, const ArnnArchitecture& arch,
                  const TrainConfig& cfg) {
  return train(train_set, val_set, initialize_weights(arch, cfg.seed, cfg.forget_bias), cfg);
}

ArnnWeights train(const WindowedDataset& train_set, const WindowedDataset& val_set, ArnnWeights w,
                  const TrainConfig& cfg) {
  cfg.validate();
  check_dataset(w.arch, train_set);
  if (!val_set.empty()) check_dataset(w.arch, val_set);
  if (train_set.samples == 0) throw DataError("training set is empty");

  w.meta = TrainingMetadata{};
  w.meta.seed = cfg.seed;
  if (cfg.epochs == 0) return w;

  ArnnKernel kernel(w, cfg.grad_chunk);
  nn::ParameterSet grads = w.params.zeros_like();
  nn::AdamState adam = nn::AdamState::for_parameters(w.params);
  const nn::AdamConfig adam_cfg{cfg.learning_rate, 0.9, 0.999, 1e-8};
  nn::Rng rng(cfg.seed ^ 0x5851f42d4c957f2dULL);

  std::vector<std::size_t> order(train_set.samples);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  nn::ParameterSet best = w.params;
  double best_loss = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
    double sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::span<const std::size_t> idx(order.data() + b, std::min(cfg.batch_size, order.size() - b));
      const double loss = kernel.loss_and_gradient(train_set, idx, grads, cfg.execution);
      if (!std::isfinite(loss) || !grads.all_finite())
        throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b / cfg.batch_size + 1) +
                           "; try a smaller learning rate or check that inputs are min-max scaled");
      sum += loss * static_cast<double>(idx.size());
      if (cfg.optimizer == Optimizer::adam)
        nn::adam_update(w.params, grads, adam, adam_cfg);
      else
        nn::sgd_update(w.params, grads, cfg.learning_rate);
    }
    EpochReport rep;
    rep.epoch = epoch;
    rep.train_loss = sum / static_cast<double>(order.size());
    rep.val_loss = val_set.empty() ? kernel.mean_squared_error(train_set, cfg.execution)
                                   : kernel.mean_squared_error(val_set, cfg.execution);
    if (!std::isfinite(rep.val_loss))
      throw NumericError("validation loss is not finite at epoch " + std::to_string(epoch));
    rep.improved = rep.val_loss < best_loss;
    if (rep.improved) {
      best_loss = rep.val_loss;
      w.meta.best_epoch = epoch;
      if (cfg.keep_best) best = w.params;
    }
    w.meta.train_loss.push_back(rep.train_loss);
    w.meta.val_loss.push_back(rep.val_loss);
    w.meta.epochs_run = epoch;
    if (cfg.on_epoch) cfg.on_epoch(rep);
  }
  w.meta.best_val_loss = best_loss;
  if (cfg.keep_best) w.params = std::move(best);
  return w;
}

}  // namespace fxh
