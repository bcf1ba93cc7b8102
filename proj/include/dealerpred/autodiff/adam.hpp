#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dealerpred/autodiff/tensor.hpp"

namespace dealerpred::ad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  AdamConfig hyper;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;

  static OptimizerState for_parameters(std::span<const Tensor> params, AdamConfig hyper = {}) {
    OptimizerState state;
    state.hyper = hyper;
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
    return state;
  }
};

/// One bias-corrected Adam update, in place, using each parameter's
/// accumulated gradient.
inline void adam_step(std::span<Tensor> params, OptimizerState& state) {
  if (params.size() != state.first_moment.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters but optimizer tracks " +
                         std::to_string(state.first_moment.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != state.first_moment[k].size() || !params[k].requires_grad()) {
      throw DimensionError("adam_step: parameter " + std::to_string(k) + " shape " +
                           shape_string(params[k].shape()) + " does not match its moment buffers");
    }
  }
  state.step += 1;
  const auto& h = state.hyper;
  const double correction1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k].mutable_values();
    auto grad = params[k].grad();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * grad[i];
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
  }
}

}  // namespace dealerpred::ad
