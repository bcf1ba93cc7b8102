#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dealerpred/autodiff/tensor.hpp"
#include "dealerpred/errors.hpp"
#include "dealerpred/random.hpp"

namespace dealerpred::models {

/// Trainable tensors keyed by path strings, kept in registration order.
/// Each tensor draws from its own stream seeded by (model seed, name), so
/// a parameter's initial values do not depend on what else the model holds.
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed = 0) : seed_(seed) {}

  /// Uniform in [−bound, bound]; bound 0 gives zeros.
  ad::Tensor add_uniform(const std::string& name, ad::Shape shape, double bound) {
    std::vector<double> values(ad::shape_size(shape), 0.0);
    if (bound > 0.0) {
      Rng rng(derive_seed(seed_, name));
      for (double& v : values) v = rng.uniform(-bound, bound);
    }
    return insert(name, ad::Tensor::from(std::move(shape), std::move(values), true));
  }

  ad::Tensor add_constant(const std::string& name, ad::Shape shape, double value) {
    std::vector<double> values(ad::shape_size(shape), value);
    return insert(name, ad::Tensor::from(std::move(shape), std::move(values), true));
  }

  const ad::Tensor& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw IndexError("no parameter named '" + name + "'");
    return entries_[it->second].second;
  }

  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t size() const { return entries_.size(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.second.size();
    return n;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) out.push_back(e.first);
    return out;
  }

  /// Handles aliasing the stored tensors, in registration order.
  std::vector<ad::Tensor> tensors() const {
    std::vector<ad::Tensor> out;
    for (const auto& e : entries_) out.push_back(e.second);
    return out;
  }

  const std::vector<std::pair<std::string, ad::Tensor>>& entries() const { return entries_; }

  /// Copies values from `other`, which must hold the same names and shapes.
  void assign_from(const ParameterStore& other) {
    if (other.size() != size()) throw DimensionError("parameter count mismatch");
    for (auto& [name, tensor] : entries_) {
      const ad::Tensor& src = other.get(name);
      if (src.shape() != tensor.shape()) {
        throw DimensionError("parameter '" + name + "' has shape " + ad::shape_string(src.shape()) +
                             ", expected " + ad::shape_string(tensor.shape()));
      }
      std::copy(src.values().begin(), src.values().end(), tensor.mutable_values().begin());
    }
  }

 private:
  ad::Tensor insert(const std::string& name, ad::Tensor tensor) {
    if (!index_.emplace(name, entries_.size()).second) {
      throw ContractError("duplicate parameter name '" + name + "'");
    }
    entries_.emplace_back(name, tensor);
    return tensor;
  }

  std::uint64_t seed_;
  std::vector<std::pair<std::string, ad::Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace dealerpred::models
