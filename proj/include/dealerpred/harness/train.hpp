#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <vector>

#include "dealerpred/autodiff/adam.hpp"
#include "dealerpred/errors.hpp"
#include "dealerpred/market/samples.hpp"
#include "dealerpred/models/model.hpp"
#include "dealerpred/random.hpp"

namespace dealerpred::harness {

struct TrainSpec {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  std::size_t patience = 0;  // epochs without improvement before stopping; 0 disables
  double min_delta = 1e-6;   // smallest loss decrease that counts as improvement

  void validate() const {
    if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0,1)");
  }
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean per-sample loss of each epoch
  bool stopped_early = false;
};

/// Mini-batch Adam on the mean squared error over every T_out×2V output.
/// Sample order is reshuffled each epoch from `seed + epoch`.
inline TrainResult train(models::SequenceModel& model, const std::vector<market::Sample>& samples,
                         const TrainSpec& spec) {
  spec.validate();
  if (samples.empty()) throw ContractError("train: empty training set");
  std::vector<market::BinaryMatrix> inputs, targets;
  inputs.reserve(samples.size());
  targets.reserve(samples.size());
  for (const auto& s : samples) {
    inputs.push_back(s.input());
    targets.push_back(s.target_days());
  }
  std::vector<ad::Tensor> target_tensors;
  for (const auto& t : targets) target_tensors.push_back(models::to_tensor(t));

  auto params = model.parameters().tensors();
  ad::AdamConfig hyper;
  hyper.learning_rate = spec.learning_rate;
  auto state = ad::OptimizerState::for_parameters(params, hyper);

  TrainResult result;
  std::vector<std::size_t> order(samples.size());
  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(spec.seed + epoch);
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += spec.batch_size) {
      const std::size_t end = std::min(order.size(), begin + spec.batch_size);
      const double weight = 1.0 / static_cast<double>(end - begin);
      ad::zero_grad(params);
      ad::Graph graph;
      ad::Tensor batch_loss;
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t k = order[i];
        const ad::Tensor loss = ad::mse_loss(model.forward(inputs[k], &targets[k]), target_tensors[k]);
        const double value = loss.item();
        if (!std::isfinite(value)) throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
        epoch_total += value;
        const ad::Tensor scaled = ad::scale(loss, weight);
        batch_loss = batch_loss.defined() ? ad::add(batch_loss, scaled) : scaled;
      }
      graph.backward(batch_loss);
      ad::adam_step(params, state);
    }
    const double mean = epoch_total / static_cast<double>(samples.size());
    result.epoch_loss.push_back(mean);
    if (spec.patience > 0) {
      if (mean < best - spec.min_delta) {
        best = mean;
        stale = 0;
      } else if (++stale >= spec.patience) {
        result.stopped_early = true;
        break;
      }
    }
  }
  for (const auto& p : params) {
    if (!p.all_finite()) throw NumericError("non-finite parameter after training");
  }
  return result;
}

inline void write_loss_curve_csv(std::ostream& out, const TrainResult& r) {
  out << "epoch,loss\n";
  out.precision(17);
  for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) out << e << ',' << r.epoch_loss[e] << '\n';
}

}  // namespace dealerpred::harness
