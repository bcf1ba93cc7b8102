#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dealerpred/autodiff/tensor.hpp"
#include "dealerpred/errors.hpp"
#include "dealerpred/market/history.hpp"
#include "dealerpred/models/config.hpp"
#include "dealerpred/models/layers.hpp"
#include "dealerpred/models/parameters.hpp"

namespace dealerpred::models {

/// Maps a T_in×2V input window to T_out×2V trade probabilities.
class SequenceModel {
 public:
  explicit SequenceModel(ModelConfig config) : config_((config.validate(), config)), params_(config_.seed) {}
  virtual ~SequenceModel() = default;

  SequenceModel(const SequenceModel&) = delete;
  SequenceModel& operator=(const SequenceModel&) = delete;

  const ModelConfig& config() const { return config_; }
  ModelKind kind() const { return config_.kind; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }

  /// Training-mode pass. Sequence-to-sequence models condition on
  /// `teacher` (the true target days) and require it.
  virtual ad::Tensor forward(const market::BinaryMatrix& input, const market::BinaryMatrix* teacher) const = 0;

  /// Inference-mode probabilities; never records.
  virtual ad::Tensor infer(const market::BinaryMatrix& input, double threshold = 0.5) const {
    (void)threshold;
    ad::NoRecord guard;
    return forward(input, nullptr);
  }

  market::BinaryMatrix predict(const market::BinaryMatrix& input, double threshold = 0.5) const {
    return binarize(infer(input, threshold), threshold);
  }

  static market::BinaryMatrix binarize(const ad::Tensor& probabilities, double threshold) {
    market::BinaryMatrix out(probabilities.rows(), probabilities.cols());
    for (std::size_t r = 0; r < out.rows(); ++r) {
      for (std::size_t c = 0; c < out.cols(); ++c) out.set(r, c, probabilities.at(r, c) >= threshold);
    }
    return out;
  }

 protected:
  void check_input(const market::BinaryMatrix& input) const {
    if (input.rows() != config_.t_in || input.cols() != config_.day_width()) {
      throw DimensionError(std::string(to_string(config_.kind)) + ": input is " + std::to_string(input.rows()) +
                           "x" + std::to_string(input.cols()) + ", expected " + std::to_string(config_.t_in) +
                           "x" + std::to_string(config_.day_width()));
    }
  }

  ModelConfig config_;
  ParameterStore params_;
};

}  // namespace dealerpred::models
