#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dealerpred/errors.hpp"

namespace dealerpred::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != 0) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

class Graph;

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty unless requires_grad
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Propagates this node's grad into the grads of its inputs.
  std::function<void(Node&)> backward;
  Graph* graph = nullptr;
  std::size_t position = 0;
};

inline void check_shape(const Shape& shape, std::size_t values) {
  for (std::size_t extent : shape) {
    if (extent == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
  }
  if (shape_size(shape) != values) {
    throw DimensionError("shape " + shape_string(shape) + " does not hold " + std::to_string(values) +
                         " values");
  }
}

}  // namespace detail

/// Shared handle to a shaped array of doubles that can take part in a
/// recorded computation. Copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false) {
    detail::check_shape(shape, values.size());
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    if (requires_grad) node->grad.assign(node->value.size(), 0.0);
    return Tensor(std::move(node));
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const std::size_t n = shape_size(shape);
    return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
  }

  static Tensor scalar(double value, bool requires_grad = false) {
    return from({1}, {value}, requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const { return rank() == 2 ? node_->shape[0] : 1; }
  std::size_t cols() const { return node_->shape.back(); }

  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }

  double at(std::size_t i) const { return node_->value.at(i); }
  double at(std::size_t r, std::size_t c) const { return node_->value.at(r * cols() + c); }

  double item() const {
    if (size() != 1) throw ContractError("item() on non-scalar tensor " + shape_string(shape()));
    return node_->value[0];
  }

  void zero_grad() {
    if (node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
  }

  /// Fresh constant holding a copy of the values.
  Tensor detach() const { return from(shape(), node_->value, false); }

  bool all_finite() const {
    for (double v : node_->value) {
      if (!std::isfinite(v)) return false;
    }
    for (double g : node_->grad) {
      if (!std::isfinite(g)) return false;
    }
    return true;
  }

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& shared_node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Tape of recorded operations. Constructing a Graph makes it the active
/// recorder for the current thread until it is destroyed; graphs nest LIFO.
/// Operations whose inputs require gradients are appended in execution
/// order, so every entry's inputs precede it.
class Graph {
 public:
  Graph() : previous_(current()) { current() = this; }
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  ~Graph() {
    for (auto& entry : entries_) entry->graph = nullptr;
    current() = previous_;
  }

  static Graph* active() { return current(); }

  std::size_t size() const { return entries_.size(); }

  void record(const std::shared_ptr<detail::Node>& node) {
    node->graph = this;
    node->position = entries_.size();
    entries_.push_back(node);
  }

  /// Reverse sweep from `loss`. Leaf gradients accumulate across calls;
  /// intermediate gradients are rebuilt on every call.
  void backward(const Tensor& loss) {
    detail::Node* root = loss.node();
    if (root->value.size() != 1) {
      throw ContractError("backward needs a scalar loss, got shape " + shape_string(root->shape));
    }
    if (root->graph != this) throw ContractError("loss was not recorded on this graph");
    const std::size_t last = root->position;
    for (std::size_t i = 0; i <= last; ++i) {
      auto& g = entries_[i]->grad;
      std::fill(g.begin(), g.end(), 0.0);
    }
    root->grad[0] = 1.0;
    for (std::size_t i = last + 1; i-- > 0;) {
      detail::Node& entry = *entries_[i];
      if (entry.backward) entry.backward(entry);
    }
  }

 private:
  static Graph*& current() {
    thread_local Graph* active_graph = nullptr;
    return active_graph;
  }
  friend class NoRecord;

  Graph* previous_;
  std::vector<std::shared_ptr<detail::Node>> entries_;
};

/// Suspends recording on this thread for its lifetime.
class NoRecord {
 public:
  NoRecord() : saved_(Graph::current()) { Graph::current() = nullptr; }
  NoRecord(const NoRecord&) = delete;
  NoRecord& operator=(const NoRecord&) = delete;
  ~NoRecord() { Graph::current() = saved_; }

 private:
  Graph* saved_;
};

inline void backward(const Tensor& loss) {
  if (!loss.defined() || loss.node()->graph == nullptr) {
    throw ContractError("backward called on a tensor that is not part of a recorded graph");
  }
  loss.node()->graph->backward(loss);
}

inline void zero_grad(std::span<Tensor> params) {
  for (auto& p : params) p.zero_grad();
}

namespace detail {

template <typename Inputs>
Tensor build_result(Shape shape, std::vector<double> value, const Inputs& inputs,
                    std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  Graph* graph = Graph::active();
  bool needs_grad = false;
  for (const Tensor& in : inputs) needs_grad = needs_grad || in.requires_grad();
  if (graph != nullptr && needs_grad) {
    node->requires_grad = true;
    node->grad.assign(node->value.size(), 0.0);
    for (const Tensor& in : inputs) node->inputs.push_back(in.shared_node());
    node->backward = std::move(backward_fn);
    graph->record(node);
  }
  return Tensor(std::move(node));
}

}  // namespace detail

/// Wraps a freshly computed value as an operation output, recording it on
/// the active graph when any input requires gradients. `backward_fn`
/// receives the output node; its `inputs` follow the order given here.
inline Tensor make_result(Shape shape, std::vector<double> value, std::initializer_list<Tensor> inputs,
                          std::function<void(detail::Node&)> backward_fn) {
  return detail::build_result(std::move(shape), std::move(value), inputs, std::move(backward_fn));
}

inline Tensor make_result(Shape shape, std::vector<double> value, const std::vector<Tensor>& inputs,
                          std::function<void(detail::Node&)> backward_fn) {
  return detail::build_result(std::move(shape), std::move(value), inputs, std::move(backward_fn));
}

}  // namespace dealerpred::ad
