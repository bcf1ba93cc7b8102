#pragma once

#include "dealerpred/models/model.hpp"

namespace dealerpred::models {

/// One LSTM direction. Gate blocks in the 4h-wide pre-activation are
/// ordered input, forget, candidate, output.
struct LstmCell {
  ad::Tensor input_weight;      // [2V×4h]
  ad::Tensor recurrent_weight;  // [h×4h]
  ad::Tensor bias;              // [4h]
  std::size_t hidden = 0;

  static LstmCell create(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t h) {
    return {store.add_uniform(prefix + ".input_weight", {in, 4 * h}, 1.0 / std::sqrt(static_cast<double>(in))),
            store.add_uniform(prefix + ".recurrent_weight", {h, 4 * h}, 1.0 / std::sqrt(static_cast<double>(h))),
            store.add_uniform(prefix + ".bias", {4 * h}, 0.0), h};
  }

  /// Final hidden state [1×h] after reading the rows of `x` in order
  /// (reversed when `backwards`).
  ad::Tensor run(const ad::Tensor& x, bool backwards) const {
    const ad::Tensor projected = ad::add_rowwise(ad::matmul(x, input_weight), bias);
    const std::size_t steps = x.shape()[0];
    ad::Tensor h = ad::Tensor::zeros({1, hidden});
    ad::Tensor c = ad::Tensor::zeros({1, hidden});
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t t = backwards ? steps - 1 - s : s;
      const ad::Tensor z = ad::add(ad::slice_rows(projected, t, 1), ad::matmul(h, recurrent_weight));
      const ad::Tensor i = ad::sigmoid(ad::slice_cols(z, 0, hidden));
      const ad::Tensor f = ad::sigmoid(ad::slice_cols(z, hidden, hidden));
      const ad::Tensor g = ad::tanh(ad::slice_cols(z, 2 * hidden, hidden));
      const ad::Tensor o = ad::sigmoid(ad::slice_cols(z, 3 * hidden, hidden));
      c = ad::add(ad::mul(f, c), ad::mul(i, g));
      h = ad::mul(o, ad::tanh(c));
    }
    return h;
  }
};

/// LSTM over the input window; the bidirectional form concatenates the
/// final states of a forward and a backward pass.
class RecurrentModel final : public SequenceModel {
 public:
  explicit RecurrentModel(const ModelConfig& config) : SequenceModel(config) {
    if (config.kind != ModelKind::LSTM && config.kind != ModelKind::BiLSTM) {
      throw ConfigError("RecurrentModel built with kind " + std::string(to_string(config.kind)));
    }
    forward_cell_ = LstmCell::create(params_, "lstm.forward", config_.day_width(), config_.hidden);
    if (bidirectional()) {
      backward_cell_ = LstmCell::create(params_, "lstm.backward", config_.day_width(), config_.hidden);
    }
    readout_ = Affine::create(params_, "readout", readout_width(), config_.t_out * config_.day_width());
  }

  bool bidirectional() const { return config_.kind == ModelKind::BiLSTM; }
  std::size_t readout_width() const { return (bidirectional() ? 2 : 1) * config_.hidden; }

  ad::Tensor forward(const market::BinaryMatrix& input, const market::BinaryMatrix*) const override {
    check_input(input);
    const ad::Tensor x = to_tensor(input);
    ad::Tensor state = forward_cell_.run(x, false);
    if (bidirectional()) state = ad::concat_cols({state, backward_cell_.run(x, true)});
    return ad::reshape(squash(readout_(state)), {config_.t_out, config_.day_width()});
  }

 private:
  LstmCell forward_cell_;
  LstmCell backward_cell_;
  Affine readout_;
};

}  // namespace dealerpred::models
