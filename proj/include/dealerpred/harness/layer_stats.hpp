#pragma once

#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dealerpred/errors.hpp"
#include "dealerpred/market/samples.hpp"
#include "dealerpred/models/transformer.hpp"

namespace dealerpred::harness {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // population
};

inline Moments moments(std::span<const double> values) {
  Moments m;
  if (values.empty()) return m;
  for (double v : values) m.mean += v;
  m.mean /= static_cast<double>(values.size());
  for (double v : values) m.variance += (v - m.mean) * (v - m.mean);
  m.variance /= static_cast<double>(values.size());
  return m;
}

struct LayerMoments {
  std::string layer;
  Moments stats;
};

/// Activation moments per layer, pooled over a probe batch, positions and
/// channels. Layers are the encoder input, each encoder layer output, the
/// decoder input, then each decoder layer output.
struct LayerStats {
  std::string model;
  std::string tag;
  std::vector<LayerMoments> layers;
};

inline LayerStats layer_signal_stats(const models::SequenceModel& model, const std::vector<market::Sample>& probe) {
  const auto* transformer = dynamic_cast<const models::TransformerModel*>(&model);
  if (transformer == nullptr) {
    throw ContractError("layer_signal_stats needs a Transformer, got " +
                        std::string(models::to_string(model.kind())));
  }
  if (probe.empty()) throw ContractError("layer_signal_stats: empty probe batch");
  ad::NoRecord guard;
  const std::size_t n_layers = model.config().n_layers;
  std::vector<std::vector<double>> pooled(2 * n_layers + 2);
  auto append = [&](std::size_t slot, const ad::Tensor& t) {
    pooled[slot].insert(pooled[slot].end(), t.values().begin(), t.values().end());
  };
  for (const auto& s : probe) {
    models::TransformerTrace trace;
    const auto teacher = s.target_days();
    transformer->forward(s.input(), &teacher, &trace);
    append(0, trace.encoder_input);
    for (std::size_t l = 0; l < n_layers; ++l) append(1 + l, trace.encoder_layers[l]);
    append(1 + n_layers, trace.decoder_input);
    for (std::size_t l = 0; l < n_layers; ++l) append(2 + n_layers + l, trace.decoder_layers[l]);
  }
  LayerStats out;
  out.model = std::string(models::to_string(model.kind()));
  auto name = [&](std::size_t slot) -> std::string {
    if (slot == 0) return "encoder.input";
    if (slot <= n_layers) return "encoder.layer" + std::to_string(slot - 1);
    if (slot == n_layers + 1) return "decoder.input";
    return "decoder.layer" + std::to_string(slot - n_layers - 2);
  };
  for (std::size_t slot = 0; slot < pooled.size(); ++slot) out.layers.push_back({name(slot), moments(pooled[slot])});
  return out;
}

/// `model,layer,mean,variance` rows.
inline void write_layer_stats_csv(std::ostream& out, const std::vector<LayerStats>& all, bool header = true) {
  if (header) out << "model,layer,mean,variance\n";
  out.precision(10);
  for (const auto& s : all) {
    for (const auto& l : s.layers) out << s.model << ',' << l.layer << ',' << l.stats.mean << ',' << l.stats.variance << '\n';
  }
}

}  // namespace dealerpred::harness
