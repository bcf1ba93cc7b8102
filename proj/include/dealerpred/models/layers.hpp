#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dealerpred/autodiff/ops.hpp"
#include "dealerpred/errors.hpp"
#include "dealerpred/market/history.hpp"
#include "dealerpred/models/parameters.hpp"

namespace dealerpred::models {

inline ad::Tensor to_tensor(const market::BinaryMatrix& m) {
  return ad::Tensor::from({m.rows(), m.cols()}, m.to_doubles());
}

/// (tanh(x) + 1) / 2, mapping pre-activations into [0, 1].
inline ad::Tensor squash(const ad::Tensor& x) { return ad::scale(ad::add_scalar(ad::tanh(x), 1.0), 0.5); }

/// x·W + b for x of shape [n×in].
struct Affine {
  ad::Tensor weight;  // [in×out]
  ad::Tensor bias;    // [out]

  static Affine create(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t out) {
    return {store.add_uniform(prefix + ".weight", {in, out}, 1.0 / std::sqrt(static_cast<double>(in))),
            store.add_uniform(prefix + ".bias", {out}, 0.0)};
  }

  ad::Tensor operator()(const ad::Tensor& x) const { return ad::add_rowwise(ad::matmul(x, weight), bias); }
};

/// Sinusoidal table: PE(p, 2i) = sin(p / 10000^(2i/d)), PE(p, 2i+1) = cos(·).
inline ad::Tensor positional_encoding(std::size_t length, std::size_t d_model) {
  if (d_model == 0 || d_model % 2 != 0) {
    throw ConfigError("positional encoding needs an even d_model, got " + std::to_string(d_model));
  }
  std::vector<double> pe(length * d_model);
  for (std::size_t p = 0; p < length; ++p) {
    for (std::size_t i = 0; i < d_model; i += 2) {
      const double angle =
          static_cast<double>(p) / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d_model));
      pe[p * d_model + i] = std::sin(angle);
      pe[p * d_model + i + 1] = std::cos(angle);
    }
  }
  return ad::Tensor::from({length, d_model}, std::move(pe));
}

/// Co-trading embedding of every row of `days` ([T×2V]): each set bit adds
/// its bond's row of `bond_table` ([V×d]) plus the row of `action_table`
/// ([2×d]) for its side. Returns [T×d].
inline ad::Tensor cte_encode_days(const market::BinaryMatrix& days, const ad::Tensor& bond_table,
                                  const ad::Tensor& action_table) {
  const std::size_t v = bond_table.shape()[0];
  if (days.cols() != 2 * v) {
    throw DimensionError("cte_encode: day width " + std::to_string(days.cols()) + " does not match 2x" +
                         std::to_string(v) + " bonds");
  }
  if (action_table.rank() != 2 || action_table.shape()[0] != 2 || action_table.shape()[1] != bond_table.cols()) {
    throw DimensionError("cte_encode: action table must be [2x" + std::to_string(bond_table.cols()) + "], got " +
                         ad::shape_string(action_table.shape()));
  }
  std::vector<std::vector<std::size_t>> buys(days.rows()), sells(days.rows());
  std::vector<double> counts(days.rows() * 2, 0.0);
  for (std::size_t t = 0; t < days.rows(); ++t) {
    for (std::size_t j = 0; j < 2 * v; ++j) {
      if (!days.at(t, j)) continue;
      (j < v ? buys[t] : sells[t]).push_back(j % v);
      counts[t * 2 + (j < v ? 0 : 1)] += 1.0;
    }
  }
  const ad::Tensor side_counts = ad::Tensor::from({days.rows(), 2}, std::move(counts));
  return ad::add(ad::add(ad::embedding_bags(bond_table, buys), ad::embedding_bags(bond_table, sells)),
                 ad::matmul(side_counts, action_table));
}

/// Single-day form: `day` is one 2V row; returns [d].
inline ad::Tensor cte_encode(const std::vector<std::uint8_t>& day, const ad::Tensor& bond_table,
                             const ad::Tensor& action_table) {
  market::BinaryMatrix m(1, day.size());
  for (std::size_t j = 0; j < day.size(); ++j) m.set(0, j, day[j] != 0);
  return ad::reshape(cte_encode_days(m, bond_table, action_table), {bond_table.cols()});
}

enum class GateMode { None, Scalar, Vector };

/// Residual multiplier of one layer: α (ReZero) or v (PPRZ).
struct ResidualGate {
  GateMode mode = GateMode::None;
  ad::Tensor alpha;  // [1]
  ad::Tensor v;      // [d]
};

struct LayerNormParams {
  ad::Tensor gamma;
  ad::Tensor beta;

  static LayerNormParams create(ParameterStore& store, const std::string& prefix, std::size_t d) {
    return {store.add_constant(prefix + ".gamma", {d}, 1.0), store.add_constant(prefix + ".beta", {d}, 0.0)};
  }
};

/// Post-norm residual when `norm` is given and the gate is off,
/// x + α·F(x) under a scalar gate, x + v ⊙ F(x) under a vector gate.
inline ad::Tensor residual_block(const ad::Tensor& x, const ad::Tensor& fx, const ResidualGate& gate,
                                 const LayerNormParams* norm = nullptr) {
  if (x.shape() != fx.shape()) {
    throw DimensionError("residual_block: input " + ad::shape_string(x.shape()) + " vs sublayer output " +
                         ad::shape_string(fx.shape()));
  }
  switch (gate.mode) {
    case GateMode::Scalar:
      return ad::add(x, ad::scale_by(fx, gate.alpha));
    case GateMode::Vector:
      return ad::add(x, ad::mul_rowwise(fx, gate.v));
    case GateMode::None:
      break;
  }
  if (norm == nullptr) throw ContractError("residual_block: ungated residual needs a layer norm");
  return ad::layer_norm(ad::add(x, fx), norm->gamma, norm->beta);
}

}  // namespace dealerpred::models
