#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "dealerpred/errors.hpp"

namespace dealerpred::models {

enum class ModelKind { FCSum, FCConcat, LSTM, BiLSTM, TransFV, TransCTE, TransRE, TransPPRZ };

inline constexpr std::array<ModelKind, 8> kAllModelKinds{ModelKind::FCSum,   ModelKind::FCConcat, ModelKind::LSTM,
                                                         ModelKind::BiLSTM,  ModelKind::TransFV,  ModelKind::TransCTE,
                                                         ModelKind::TransRE, ModelKind::TransPPRZ};

inline std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::FCSum: return "FCSum";
    case ModelKind::FCConcat: return "FCConcat";
    case ModelKind::LSTM: return "LSTM";
    case ModelKind::BiLSTM: return "BiLSTM";
    case ModelKind::TransFV: return "TransFV";
    case ModelKind::TransCTE: return "TransCTE";
    case ModelKind::TransRE: return "TransRE";
    case ModelKind::TransPPRZ: return "TransPPRZ";
  }
  return "?";
}

/// Case-insensitive; underscores are ignored ("fc_sum" == "FCSum").
inline ModelKind parse_model_kind(std::string_view text) {
  auto fold = [](std::string_view s) {
    std::string out;
    for (char c : s) {
      if (c != '_' && c != '-') out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
  };
  const std::string wanted = fold(text);
  for (ModelKind k : kAllModelKinds) {
    if (fold(to_string(k)) == wanted) return k;
  }
  throw ConfigError("unknown model kind '" + std::string(text) + "'");
}

inline bool is_transformer(ModelKind kind) {
  return kind == ModelKind::TransFV || kind == ModelKind::TransCTE || kind == ModelKind::TransRE ||
         kind == ModelKind::TransPPRZ;
}

struct ModelConfig {
  ModelKind kind = ModelKind::TransPPRZ;
  std::size_t vocab = 1;  // V; day vectors have width 2V
  std::size_t t_in = 5;
  std::size_t t_out = 5;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t n_layers = 2;
  std::size_t d_ff = 128;
  std::size_t hidden = 64;
  std::uint64_t seed = 0;

  std::size_t day_width() const { return 2 * vocab; }

  void validate() const {
    auto positive = [](std::size_t v, const char* name) {
      if (v == 0) throw ConfigError(std::string(name) + " must be at least 1");
    };
    positive(vocab, "vocab");
    positive(t_in, "t_in");
    positive(t_out, "t_out");
    positive(d_model, "d_model");
    positive(heads, "heads");
    positive(n_layers, "n_layers");
    positive(d_ff, "d_ff");
    positive(hidden, "hidden");
    if (d_model % heads != 0) {
      throw ConfigError("d_model " + std::to_string(d_model) + " is not divisible by " + std::to_string(heads) +
                        " heads");
    }
    if (is_transformer(kind) && d_model % 2 != 0) {
      throw ConfigError("positional encoding needs an even d_model, got " + std::to_string(d_model));
    }
  }

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace dealerpred::models
