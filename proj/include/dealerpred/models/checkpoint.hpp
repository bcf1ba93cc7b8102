#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dealerpred/models/factory.hpp"

namespace dealerpred::models {

/// A checkpoint is `<stem>.manifest` (text: model config, then one
/// `param <name> <shape> <offset>` line per tensor, offsets in values) and
/// `<stem>.bin` (every value as little-endian IEEE-754 binary64).
namespace checkpoint_detail {

inline constexpr const char* kMagic = "dealerpred-checkpoint 1";

inline std::string shape_text(const ad::Shape& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
  return s;
}

inline ad::Shape parse_shape(const std::string& text) {
  ad::Shape shape;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) shape.push_back(std::stoul(part));
  return shape;
}

}  // namespace checkpoint_detail

inline void save_checkpoint(const SequenceModel& model, const std::filesystem::path& stem) {
  using namespace checkpoint_detail;
  std::ofstream manifest(stem.string() + ".manifest");
  std::ofstream payload(stem.string() + ".bin", std::ios::binary);
  if (!manifest || !payload) throw std::runtime_error("cannot write checkpoint " + stem.string());
  const ModelConfig& c = model.config();
  manifest << kMagic << '\n'
           << "config kind " << to_string(c.kind) << '\n'
           << "config vocab " << c.vocab << '\n'
           << "config t_in " << c.t_in << '\n'
           << "config t_out " << c.t_out << '\n'
           << "config d_model " << c.d_model << '\n'
           << "config heads " << c.heads << '\n'
           << "config n_layers " << c.n_layers << '\n'
           << "config d_ff " << c.d_ff << '\n'
           << "config hidden " << c.hidden << '\n'
           << "config seed " << c.seed << '\n';
  std::size_t offset = 0;
  for (const auto& [name, tensor] : model.parameters().entries()) {
    manifest << "param " << name << ' ' << shape_text(tensor.shape()) << ' ' << offset << '\n';
    for (double v : tensor.values()) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      unsigned char bytes[8];
      for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
      payload.write(reinterpret_cast<const char*>(bytes), 8);
    }
    offset += tensor.size();
  }
  if (!manifest || !payload) throw std::runtime_error("failed writing checkpoint " + stem.string());
}

/// Rebuilds the model from the manifest's config and overwrites every
/// parameter with the stored values.
inline std::unique_ptr<SequenceModel> load_checkpoint(const std::filesystem::path& stem) {
  using namespace checkpoint_detail;
  std::ifstream manifest(stem.string() + ".manifest");
  std::ifstream payload(stem.string() + ".bin", std::ios::binary);
  if (!manifest || !payload) throw std::runtime_error("cannot open checkpoint " + stem.string());
  std::string line;
  if (!std::getline(manifest, line) || line != kMagic) {
    throw std::runtime_error(stem.string() + ".manifest: not a checkpoint manifest");
  }
  ModelConfig config;
  struct Entry {
    std::string name;
    ad::Shape shape;
    std::size_t offset;
  };
  std::vector<Entry> entries;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string tag, key, value;
    fields >> tag >> key >> value;
    if (tag == "config") {
      if (key == "kind") config.kind = parse_model_kind(value);
      else if (key == "vocab") config.vocab = std::stoul(value);
      else if (key == "t_in") config.t_in = std::stoul(value);
      else if (key == "t_out") config.t_out = std::stoul(value);
      else if (key == "d_model") config.d_model = std::stoul(value);
      else if (key == "heads") config.heads = std::stoul(value);
      else if (key == "n_layers") config.n_layers = std::stoul(value);
      else if (key == "d_ff") config.d_ff = std::stoul(value);
      else if (key == "hidden") config.hidden = std::stoul(value);
      else if (key == "seed") config.seed = std::stoull(value);
      else throw std::runtime_error("unknown checkpoint config key '" + key + "'");
    } else if (tag == "param") {
      std::size_t offset = 0;
      fields >> offset;
      if (!fields) throw std::runtime_error("malformed checkpoint line: " + line);
      entries.push_back({key, parse_shape(value), offset});
    } else {
      throw std::runtime_error("malformed checkpoint line: " + line);
    }
  }
  std::vector<double> values;
  unsigned char bytes[8];
  while (payload.read(reinterpret_cast<char*>(bytes), 8)) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    values.push_back(std::bit_cast<double>(bits));
  }

  auto model = build_model(config);
  ParameterStore& store = model->parameters();
  if (entries.size() != store.size()) {
    throw DimensionError("checkpoint holds " + std::to_string(entries.size()) + " tensors, model expects " +
                         std::to_string(store.size()));
  }
  for (const auto& e : entries) {
    ad::Tensor t = store.get(e.name);
    if (t.shape() != e.shape) {
      throw DimensionError("checkpoint tensor '" + e.name + "' is " + ad::shape_string(e.shape) + ", model expects " +
                           ad::shape_string(t.shape()));
    }
    if (e.offset + t.size() > values.size()) throw DimensionError("checkpoint payload too short for '" + e.name + "'");
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(e.offset), t.size(), t.mutable_values().begin());
  }
  return model;
}

}  // namespace dealerpred::models
