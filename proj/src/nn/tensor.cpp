#include "fxh/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace fxh::nn {

std::size_t shape_size(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> s, double fill) : shape(std::move(s)) {
  data.assign(shape_size(shape), fill);
}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  if (data.size() != shape_size(shape))
    throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_string());
}

bool Tensor::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

std::size_t ParameterSet::add(std::string name, Tensor t) {
  if (find(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(t));
  return tensors_.size() - 1;
}

std::optional<std::size_t> ParameterSet::find(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::size_t ParameterSet::index(const std::string& name) const {
  if (auto i = find(name)) return *i;
  throw std::out_of_range("no parameter named '" + name + "'");
}

std::size_t ParameterSet::total_elements() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

bool ParameterSet::all_finite() const {
  return std::all_of(tensors_.begin(), tensors_.end(), [](const Tensor& t) { return t.all_finite(); });
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  out.names_ = names_;
  out.tensors_.reserve(tensors_.size());
  for (const auto& t : tensors_) out.tensors_.emplace_back(t.shape, 0.0);
  return out;
}

void ParameterSet::set_zero() {
  for (auto& t : tensors_) std::fill(t.data.begin(), t.data.end(), 0.0);
}

bool ParameterSet::compatible_with(const ParameterSet& other) const {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i)
    if (tensors_[i].shape != other.tensors_[i].shape) return false;
  return true;
}

void ParameterSet::accumulate(const ParameterSet& other) {
  if (!compatible_with(other)) throw std::invalid_argument("accumulate: incompatible parameter sets");
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    auto& dst = tensors_[i].data;
    const auto& src = other.tensors_[i].data;
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
}

void glorot_uniform(Tensor& t, Rng& rng) {
  const double fan_out = static_cast<double>(t.rows());
  const double fan_in = static_cast<double>(t.cols());
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  // Built from raw 53-bit draws so values do not depend on the standard library's
  // distribution implementation.
  for (double& v : t.data) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    v = (2.0 * u - 1.0) * a;
  }
}

}  // namespace fxh::nn
