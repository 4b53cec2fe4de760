#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "fxh/arnn.hpp"
#include "fxh/errors.hpp"
#include "fxh/synthetic.hpp"

using namespace fxh;

namespace {

ArnnArchitecture small_arch(NetworkKind kind = NetworkKind::arnn) {
  ArnnArchitecture a;
  a.kind = kind;
  a.encoder_layers = {8, 6};
  a.decoder_layers = {7, 6};
  a.step_feature_dim = 5;
  a.head_rnn_width = 6;
  a.head_dense = {4, 1};
  return a;
}

const ArResidualData& data() {
  static const ArResidualData d = [] {
    ArResidualSpec s;
    s.rows = 400;
    s.seed = 5;
    return ar_residual_dataset(s);
  }();
  return d;
}

ArnnWeights zero_weights(const ArnnArchitecture& arch) {
  ArnnWeights w;
  w.arch = arch;
  w.params = parameter_layout(arch);
  return w;
}

std::vector<double> window(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

bool same_params(const nn::ParameterSet& a, const nn::ParameterSet& b) {
  if (!a.compatible_with(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].data != b[i].data) return false;
  return true;
}

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST(Architecture, DescriptorRoundTripAndValidation) {
  const ArnnArchitecture a = small_arch();
  EXPECT_EQ(ArnnArchitecture::from_descriptor(a.descriptor()), a);
  ArnnArchitecture bad = a;
  bad.head_dense = {4, 2};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = a;
  bad.encoder_layers.clear();
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  EXPECT_EQ(network_kind_from_string(to_string(NetworkKind::lstm)), NetworkKind::lstm);
  EXPECT_THROW(network_kind_from_string("gru"), std::invalid_argument);
}

TEST(Encoder, ZeroWeightsGiveZeroStates) {
  const ArnnWeights w = zero_weights(ArnnArchitecture{});
  const Matrix e = encode(w, window(10 * 16, 1));
  const Matrix d = decode(w, window(10, 2));
  EXPECT_EQ(e.rows, 10u);
  EXPECT_EQ(e.cols, 10u);
  EXPECT_EQ(d.rows, 10u);
  EXPECT_EQ(d.cols, 10u);
  for (double v : e.data) EXPECT_EQ(v, 0.0);
  for (double v : d.data) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(predict(w, window(160, 3), window(10, 4)), 0.0);
}

TEST(Encoder, DefaultShapesAndDeterminism) {
  const ArnnWeights w = initialize_weights(ArnnArchitecture{}, 9);
  const auto x = window(160, 5), z = window(10, 6);
  const Matrix e = encode(w, x);
  EXPECT_EQ(e.rows, 10u);
  EXPECT_EQ(e.cols, 10u);
  for (double v : e.data) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);  // ReLU projection
  }
  EXPECT_EQ(decode(w, z).data, decode(w, z).data);
  EXPECT_TRUE(std::isfinite(predict(w, x, z)));
  EXPECT_THROW(encode(w, window(150, 1)), std::invalid_argument);
  EXPECT_THROW(decode(w, window(11, 1)), std::invalid_argument);
  EXPECT_THROW(predict(w, x, window(9, 1)), std::invalid_argument);
}

TEST(Attention, SingleStep) {
  Matrix enc(1, 3), dec(1, 3);
  enc.data = {1.0, -2.0, 0.5};
  dec.data = {0.3, 0.4, -1.0};
  const AttentionResult r = attend(enc, dec);
  EXPECT_EQ(r.alpha(0, 0), 1.0);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(r.fused(0, k), dec(0, k) * enc(0, k));
}

TEST(Attention, IdenticalEncoderStates) {
  Matrix enc(4, 2), dec(4, 2);
  for (std::size_t j = 0; j < 4; ++j) {
    enc(j, 0) = 0.7;
    enc(j, 1) = -0.2;
    dec(j, 0) = static_cast<double>(j);
    dec(j, 1) = 1.0 - static_cast<double>(j);
  }
  const AttentionResult r = attend(enc, dec);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(r.fused(i, 0), dec(i, 0) * 0.7, 1e-15);
    EXPECT_NEAR(r.fused(i, 1), dec(i, 1) * -0.2, 1e-15);
  }
}

TEST(Attention, OrthogonalQueryIsUniform) {
  Matrix enc(5, 2, 0.0), dec(2, 2, 0.0);
  for (std::size_t j = 0; j < 5; ++j) enc(j, 0) = static_cast<double>(j) - 2.0;
  dec(0, 1) = 3.0;
  dec(1, 1) = -1.0;
  const AttentionResult r = attend(enc, dec);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(r.alpha(i, j), 0.2, 1e-15);
}

TEST(Attention, WeightsAreProbabilitiesAndPermutationInvariant) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Matrix enc(6, 4), dec(6, 4);
  for (double& v : enc.data) v = g(rng);
  for (double& v : dec.data) v = g(rng);
  const AttentionResult r = attend(enc, dec);
  for (std::size_t i = 0; i < 6; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_GE(r.alpha(i, j), 0.0);
      s += r.alpha(i, j);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  // Permuting encoder steps permutes the weights and leaves the context unchanged.
  const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  Matrix shuffled(6, 4);
  for (std::size_t j = 0; j < 6; ++j)
    for (std::size_t k = 0; k < 4; ++k) shuffled(j, k) = enc(perm[j], k);
  const AttentionResult q = attend(shuffled, dec);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(q.alpha(i, j), r.alpha(i, perm[j]), 1e-15);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(q.fused(i, k), r.fused(i, k), 1e-12);
  }
  EXPECT_THROW(attend(Matrix(3, 2), Matrix(3, 3)), std::invalid_argument);
}

TEST(Kernel, BatchedPredictionMatchesSingleWindow) {
  for (NetworkKind kind : {NetworkKind::arnn, NetworkKind::rnn, NetworkKind::lstm}) {
    const ArnnWeights w = initialize_weights(small_arch(kind), 4);
    ArnnKernel k(w, 5);
    const auto& ds = data().val;
    const auto batched = k.predict(ds, Execution::serial);
    ASSERT_EQ(batched.size(), ds.samples);
    for (std::size_t i = 0; i < ds.samples; i += 7)
      EXPECT_NEAR(batched[i], predict(w, ds.x_window(i), ds.z_window(i)), 1e-12) << to_string(kind);
  }
}

TEST(Kernel, GradientMatchesFiniteDifferences) {
  for (NetworkKind kind : {NetworkKind::arnn, NetworkKind::rnn, NetworkKind::lstm}) {
    const ArnnWeights w = initialize_weights(small_arch(kind), 11);
    std::vector<std::size_t> idx(12);
    std::iota(idx.begin(), idx.end(), 20);
    const auto& ds = data().train;
    ArnnKernel base(w, 4);
    const nn::LossFn loss = [&](const nn::ParameterSet& p) { return base.evaluate_loss(p, ds, idx); };
    const nn::GradientFn grad = [&](const nn::ParameterSet& p) {
      ArnnWeights at = w;
      at.params = p;
      ArnnKernel k(at, 4);
      nn::ParameterSet g = p.zeros_like();
      k.loss_and_gradient(ds, idx, g, Execution::serial);
      return g;
    };
    const auto r = nn::gradient_check(loss, grad, w.params, {1e-5, 60, 3});
    EXPECT_LT(r.max_rel_error, 1e-4) << to_string(kind) << " " << r.worst_tensor << "[" << r.worst_index << "] " << r.worst_analytic << " vs " << r.worst_numeric;
  }
}

TEST(Kernel, SerialAndParallelAreBitIdentical) {
  const ArnnWeights w = initialize_weights(small_arch(), 8);
  const auto& ds = data().train;
  std::vector<std::size_t> idx(ds.samples);
  std::iota(idx.begin(), idx.end(), 0);
  ArnnKernel a(w, 16), b(w, 16);
  nn::ParameterSet ga = w.params.zeros_like(), gb = w.params.zeros_like();
  const double la = a.loss_and_gradient(ds, idx, ga, Execution::serial);
  const double lb = b.loss_and_gradient(ds, idx, gb, Execution::parallel);
  EXPECT_EQ(la, lb);
  EXPECT_TRUE(same_params(ga, gb));
  EXPECT_EQ(a.predict(ds, Execution::serial), b.predict(ds, Execution::parallel));
}

TEST(Training, ZeroEpochsReturnsInitialization) {
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 3;
  const ArnnWeights w = train(data().train, data().val, small_arch(), cfg);
  EXPECT_TRUE(same_params(w.params, initialize_weights(small_arch(), 3).params));
  EXPECT_EQ(w.meta.epochs_run, 0u);
}

TEST(Training, SameSeedIsBitIdenticalAndExecutionIndependent) {
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 21;
  cfg.execution = Execution::serial;
  const ArnnWeights a = train(data().train, data().val, small_arch(), cfg);
  const ArnnWeights b = train(data().train, data().val, small_arch(), cfg);
  cfg.execution = Execution::parallel;
  const ArnnWeights c = train(data().train, data().val, small_arch(), cfg);
  EXPECT_TRUE(same_params(a.params, b.params));
  EXPECT_TRUE(same_params(a.params, c.params));
  EXPECT_EQ(a.meta.val_loss, c.meta.val_loss);
  cfg.seed = 22;
  EXPECT_FALSE(same_params(a.params, train(data().train, data().val, small_arch(), cfg).params));
}

TEST(Training, KeepBestRetainsLowestValidationLoss) {
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.learning_rate = 0.02;  // large enough that validation loss bounces
  std::vector<EpochReport> reports;
  cfg.on_epoch = [&](const EpochReport& r) { reports.push_back(r); };
  const ArnnWeights w = train(data().train, data().val, small_arch(), cfg);
  ASSERT_EQ(reports.size(), 8u);
  ArnnKernel k(w);
  const double final_val = k.mean_squared_error(data().val, Execution::serial);
  for (double v : w.meta.val_loss) EXPECT_LE(final_val, v + 1e-15);
  EXPECT_EQ(final_val, w.meta.val_loss[w.meta.best_epoch - 1]);
  EXPECT_EQ(w.meta.best_val_loss, *std::min_element(w.meta.val_loss.begin(), w.meta.val_loss.end()));
}

TEST(Training, LossDecreasesOnLearnableData) {
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.learning_rate = 5e-3;
  const ArnnWeights w = train(data().train, data().val, small_arch(), cfg);
  EXPECT_LT(w.meta.train_loss.back(), 0.5 * w.meta.train_loss.front());
}

TEST(Training, RejectsMismatchedData) {
  ArnnArchitecture a = small_arch();
  a.n_features = 15;
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train(data().train, data().val, a, cfg), std::invalid_argument);
  cfg.learning_rate = -1.0;
  EXPECT_THROW(train(data().train, data().val, small_arch(), cfg), std::invalid_argument);
}

TEST(Training, DivergenceAbortsWithHint) {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.optimizer = Optimizer::sgd;
  cfg.learning_rate = 1e200;
  try {
    train(data().train, data().val, small_arch(), cfg);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("learning rate"), std::string::npos) << e.what();
  }
}

TEST(WeightFile, RoundTripIsBitExact) {
  TrainConfig cfg;
  cfg.epochs = 1;
  const ArnnWeights w = train(data().train, data().val, small_arch(), cfg);
  const auto path = temp_file("fxh_arnn_rt.arnn");
  save_weights(w, path);
  const ArnnArchitecture expected = small_arch();
  const ArnnWeights back = load_weights(path, &expected);
  EXPECT_EQ(back.arch, w.arch);
  EXPECT_TRUE(same_params(back.params, w.params));
  EXPECT_EQ(back.meta.best_epoch, w.meta.best_epoch);
  EXPECT_EQ(back.meta.val_loss, w.meta.val_loss);
  EXPECT_EQ(serialize_weights(back), serialize_weights(w));
}

TEST(WeightFile, CorruptionAndTruncationFailTheChecksum) {
  const ArnnWeights w = initialize_weights(small_arch(), 2);
  auto bytes = serialize_weights(w);
  for (std::size_t pos : {bytes.size() / 3, bytes.size() / 2, bytes.size() - 9}) {
    auto flipped = bytes;
    flipped[pos] ^= 0x10;
    EXPECT_THROW(deserialize_weights(flipped), DataError) << pos;
  }
  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(bytes.size() - 100));
  try {
    deserialize_weights(cut);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos) << e.what();
  }
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(deserialize_weights(magic), DataError);
  EXPECT_THROW(load_weights(temp_file("fxh_arnn_missing.arnn")), DataError);
}

TEST(WeightFile, ArchitectureMismatchIsRejected) {
  const ArnnWeights w = initialize_weights(small_arch(), 2);
  const auto bytes = serialize_weights(w);
  ArnnArchitecture other = small_arch();
  other.head_rnn_width = 7;
  try {
    deserialize_weights(bytes, &other);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("architecture"), std::string::npos) << e.what();
  }
  const ArnnArchitecture def{};
  EXPECT_THROW(deserialize_weights(bytes, &def), DataError);
}
