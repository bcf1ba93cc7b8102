#pragma once

#include "dealerpred/models/model.hpp"

namespace dealerpred::models {

/// Three tanh layers over the input window, either summed over days or
/// flattened; the last layer emits all T_out day vectors at once.
class FullyConnectedModel final : public SequenceModel {
 public:
  explicit FullyConnectedModel(const ModelConfig& config) : SequenceModel(config) {
    if (config.kind != ModelKind::FCSum && config.kind != ModelKind::FCConcat) {
      throw ConfigError("FullyConnectedModel built with kind " + std::string(to_string(config.kind)));
    }
    const std::size_t h = config_.hidden;
    layers_[0] = Affine::create(params_, "fc.layer0", input_width(), h);
    layers_[1] = Affine::create(params_, "fc.layer1", h, h);
    layers_[2] = Affine::create(params_, "fc.layer2", h, config_.t_out * config_.day_width());
  }

  std::size_t input_width() const {
    return config_.kind == ModelKind::FCSum ? config_.day_width() : config_.t_in * config_.day_width();
  }

  ad::Tensor forward(const market::BinaryMatrix& input, const market::BinaryMatrix*) const override {
    check_input(input);
    const ad::Tensor x = to_tensor(input);
    ad::Tensor h = config_.kind == ModelKind::FCSum ? ad::reshape(ad::sum_rows(x), {1, input_width()})
                                                    : ad::reshape(x, {1, input_width()});
    h = ad::tanh(layers_[0](h));
    h = ad::tanh(layers_[1](h));
    return ad::reshape(squash(layers_[2](h)), {config_.t_out, config_.day_width()});
  }

 private:
  Affine layers_[3];
};

}  // namespace dealerpred::models
