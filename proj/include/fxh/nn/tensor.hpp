#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace fxh::nn {

/// Row-major float64 tensor. Rank-1 tensors are treated as column vectors.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  /// Throws std::invalid_argument when data.size() != product(shape).
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : size() / shape[0]; }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  bool all_finite() const;
  std::string shape_string() const;
};

std::size_t shape_size(std::span<const std::size_t> shape);

/// Ordered collection of named tensors. Order is part of the identity: two sets
/// are compatible when names and shapes agree position by position.
class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor t);
  std::optional<std::size_t> find(const std::string& name) const;
  /// Throws std::out_of_range for unknown names.
  std::size_t index(const std::string& name) const;

  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
  Tensor& at(const std::string& name) { return tensors_[index(name)]; }
  const Tensor& at(const std::string& name) const { return tensors_[index(name)]; }
  const std::string& name(std::size_t i) const { return names_[i]; }

  std::size_t size() const { return tensors_.size(); }
  std::size_t total_elements() const;
  bool all_finite() const;

  /// Same names and shapes, zero data.
  ParameterSet zeros_like() const;
  void set_zero();
  bool compatible_with(const ParameterSet& other) const;
  /// this += other, tensor by tensor in order.
  void accumulate(const ParameterSet& other);

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

using Rng = std::mt19937_64;

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)), fan_in = cols, fan_out = rows.
void glorot_uniform(Tensor& t, Rng& rng);

}  // namespace fxh::nn
