#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "dealerpred/autodiff/tensor.hpp"

namespace dealerpred::ad {

/// Compares reverse-mode gradients of `loss_fn` against central
/// differences, coordinate by coordinate over every tensor in `params`.
/// Returns max |analytic − numeric| / max(1e-8, |analytic| + |numeric|).
///
/// `loss_fn` must build its result from the current values of `params`
/// and be deterministic. Parameter gradients are overwritten.
inline double finite_diff_check(const std::function<Tensor()>& loss_fn, std::span<Tensor> params,
                                double eps = 1e-5) {
  for (auto& p : params) p.zero_grad();
  {
    Graph graph;
    Tensor loss = loss_fn();
    graph.backward(loss);
  }
  double worst = 0.0;
  NoRecord no_record;
  for (auto& p : params) {
    std::vector<double> analytic(p.grad().begin(), p.grad().end());
    auto values = p.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = loss_fn().item();
      values[i] = saved - eps;
      const double down = loss_fn().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err =
          std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace dealerpred::ad
