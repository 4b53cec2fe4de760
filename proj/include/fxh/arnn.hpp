#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fxh/execution.hpp"
#include "fxh/matrix.hpp"
#include "fxh/nn/gradient_check.hpp"
#include "fxh/nn/layers.hpp"
#include "fxh/nn/tape.hpp"
#include "fxh/timeseries_io.hpp"

namespace fxh {

/// arnn: RNN encoder over features, LSTM decoder over exogenous input, dot-product
/// attention, LSTM head. rnn / lstm: a plain stack over [x_t; z_t] followed by the
/// dense head (encoder_layers widths for rnn, decoder_layers widths for lstm).
enum class NetworkKind { arnn, rnn, lstm };

std::string to_string(NetworkKind k);
NetworkKind network_kind_from_string(const std::string& s);

struct ArnnArchitecture {
  NetworkKind kind = NetworkKind::arnn;
  std::size_t T = 10;
  std::vector<std::size_t> encoder_layers{64, 32};
  std::vector<std::size_t> decoder_layers{64, 32};
  std::size_t step_feature_dim = 10;
  std::size_t head_rnn_width = 32;
  std::vector<std::size_t> head_dense{16, 1};
  std::size_t n_features = 16;
  std::size_t n_exo = 1;
  bool rnn_bias = true;

  /// Throws std::invalid_argument.
  void validate() const;
  /// Canonical "key=value" lines; equal architectures give equal text.
  std::string descriptor() const;
  static ArnnArchitecture from_descriptor(const std::string& text);

  bool operator==(const ArnnArchitecture&) const = default;
};

struct TrainingMetadata {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;  ///< 1-based; 0 means the initialization was kept
  double best_val_loss = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  std::vector<double> train_loss;  ///< per epoch, mean over the epoch's batches
  std::vector<double> val_loss;    ///< per epoch, after the epoch's updates
};

struct ArnnWeights {
  ArnnArchitecture arch;
  nn::ParameterSet params;
  TrainingMetadata meta;
};

/// Glorot-uniform matrices, zero biases, LSTM forget-gate bias set to forget_bias.
ArnnWeights initialize_weights(const ArnnArchitecture& arch, std::uint64_t seed, double forget_bias = 1.0);
/// Tensor names and shapes the architecture declares, all zero.
nn::ParameterSet parameter_layout(const ArnnArchitecture& arch);

// Single-window evaluation. Windows are row-major (T x width).
Matrix encode(const ArnnWeights& w, std::span<const double> x_window);
Matrix decode(const ArnnWeights& w, std::span<const double> z_window);

struct AttentionResult {
  Matrix fused;  ///< (T x d): decoder_i * context_i
  Matrix alpha;  ///< (T x T): row i holds the weights of decoder step i over encoder steps
};
AttentionResult attend(const Matrix& encoder_states, const Matrix& decoder_states);

double predict(const ArnnWeights& w, std::span<const double> x_window, std::span<const double> z_window);

/// Batched forward/backward over a dataset. Samples are processed in fixed-size
/// chunks; the parallel path runs chunks concurrently and reduces their gradients
/// in chunk order, so both paths return bit-identical results.
class ArnnKernel {
 public:
  /// The weights must outlive the kernel; their values may change between calls.
  explicit ArnnKernel(const ArnnWeights& w, std::size_t chunk = 16);

  /// Mean squared error over `indices`; grads is overwritten with its gradient.
  double loss_and_gradient(const WindowedDataset& data, std::span<const std::size_t> indices,
                           nn::ParameterSet& grads, Execution exec = Execution::parallel);
  std::vector<double> predict(const WindowedDataset& data, Execution exec = Execution::parallel);
  double mean_squared_error(const WindowedDataset& data, Execution exec = Execution::parallel);

  /// Loss over `indices` in one pass on one tape, with the ReLU pattern for
  /// gradient checking. `params` replaces the bound weights' values.
  nn::LossEvaluation evaluate_loss(const nn::ParameterSet& params, const WindowedDataset& data,
                                   std::span<const std::size_t> indices) const;

 private:
  struct Layout;
  const ArnnWeights* weights_;
  std::size_t chunk_;
  std::shared_ptr<const Layout> layout_;
  std::vector<std::unique_ptr<nn::Tape>> tapes_;  // one per thread
  std::vector<nn::ParameterSet> chunk_grads_;     // one per chunk of the current batch
  std::vector<double> chunk_loss_;

  void ensure_tapes();
};

enum class Optimizer { adam, sgd };

struct EpochReport {
  std::size_t epoch = 0;  ///< 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool improved = false;
};

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 100;
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;
  bool keep_best = true;
  Optimizer optimizer = Optimizer::adam;
  double forget_bias = 1.0;
  std::size_t grad_chunk = 16;
  Execution execution = Execution::parallel;
  std::function<void(const EpochReport&)> on_epoch;

  void validate() const;
};

/// Trains from a fresh initialization seeded by cfg.seed.
ArnnWeights train(const WindowedDataset& train_set, const WindowedDataset& val_set, const ArnnArchitecture& arch,
                  const TrainConfig& cfg);
/// Continues from the given weights.
ArnnWeights train(const WindowedDataset& train_set, const WindowedDataset& val_set, ArnnWeights init,
                  const TrainConfig& cfg);

inline constexpr std::uint16_t kWeightFormatVersion = 1;

void save_weights(const ArnnWeights& w, const std::filesystem::path& path);
/// Throws DataError on bad magic, unsupported version, checksum failure, or tensors
/// inconsistent with the stored architecture; and when `expected` is given and the
/// stored architecture differs from it.
ArnnWeights load_weights(const std::filesystem::path& path, const ArnnArchitecture* expected = nullptr);

std::vector<std::uint8_t> serialize_weights(const ArnnWeights& w);
ArnnWeights deserialize_weights(std::span<const std::uint8_t> bytes, const ArnnArchitecture* expected = nullptr);

}  // namespace fxh
