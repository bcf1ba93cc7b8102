#pragma once

#include <memory>

#include "dealerpred/models/fc.hpp"
#include "dealerpred/models/recurrent.hpp"
#include "dealerpred/models/transformer.hpp"

namespace dealerpred::models {

inline std::unique_ptr<SequenceModel> build_model(const ModelConfig& config) {
  config.validate();
  switch (config.kind) {
    case ModelKind::FCSum:
    case ModelKind::FCConcat:
      return std::make_unique<FullyConnectedModel>(config);
    case ModelKind::LSTM:
    case ModelKind::BiLSTM:
      return std::make_unique<RecurrentModel>(config);
    case ModelKind::TransFV:
    case ModelKind::TransCTE:
    case ModelKind::TransRE:
    case ModelKind::TransPPRZ:
      return std::make_unique<TransformerModel>(config);
  }
  throw ConfigError("unknown model kind");
}

}  // namespace dealerpred::models
