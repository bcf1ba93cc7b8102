#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dealerpred/autodiff/attention.hpp"
#include "dealerpred/models/model.hpp"

namespace dealerpred::models {

enum class EmbeddingKind { Affine, CoTrading };
enum class ResidualMode { LayerNorm, Scalar, Vector };

struct TransformerVariant {
  EmbeddingKind embedding;
  ResidualMode residual;
};

inline TransformerVariant transformer_variant(ModelKind kind) {
  switch (kind) {
    case ModelKind::TransFV: return {EmbeddingKind::Affine, ResidualMode::LayerNorm};
    case ModelKind::TransCTE: return {EmbeddingKind::CoTrading, ResidualMode::LayerNorm};
    case ModelKind::TransRE: return {EmbeddingKind::Affine, ResidualMode::Scalar};
    case ModelKind::TransPPRZ: return {EmbeddingKind::CoTrading, ResidualMode::Vector};
    default: break;
  }
  throw ConfigError("kind " + std::string(to_string(kind)) + " is not a Transformer");
}

/// Per-layer outputs of one pass, after each layer's last residual.
struct TransformerTrace {
  ad::Tensor encoder_input;  // embedding + positional encoding
  std::vector<ad::Tensor> encoder_layers;
  ad::Tensor decoder_input;
  std::vector<ad::Tensor> decoder_layers;
};

namespace detail {

inline ad::AttentionWeights attention_params(ParameterStore& store, const std::string& prefix, std::size_t d) {
  auto weight = [&](const char* part) {
    return store.add_uniform(prefix + "." + part + ".weight", {d, d}, 1.0 / std::sqrt(static_cast<double>(d)));
  };
  auto bias = [&](const char* part) { return store.add_uniform(prefix + "." + part + ".bias", {d}, 0.0); };
  ad::AttentionWeights w;
  w.query = weight("query");
  w.query_bias = bias("query");
  w.key = weight("key");
  w.key_bias = bias("key");
  w.value = weight("value");
  w.value_bias = bias("value");
  w.output = weight("output");
  w.output_bias = bias("output");
  return w;
}

struct FeedForward {
  Affine inner;
  Affine outer;

  ad::Tensor operator()(const ad::Tensor& x) const { return outer(ad::tanh(inner(x))); }
};

struct Layer {
  ad::AttentionWeights self_attention;
  ad::AttentionWeights cross_attention;  // decoder only
  FeedForward ffn;
  ResidualGate gate;
  std::vector<LayerNormParams> norms;  // one per sublayer under LayerNorm
};

}  // namespace detail

/// Encoder–decoder Transformer over day vectors. The input representation
/// (affine projection of the multi-hot, or co-trading embedding) and the
/// residual scheme (post-LayerNorm, scalar ReZero gate, or per-dimension
/// PPRZ gate) are set by the variant; each layer owns one gate shared by
/// its sublayers.
class TransformerModel final : public SequenceModel {
 public:
  explicit TransformerModel(const ModelConfig& config)
      : TransformerModel(config, transformer_variant(config.kind)) {}

  TransformerModel(const ModelConfig& config, TransformerVariant variant)
      : SequenceModel(config), variant_(variant) {
    const std::size_t d = config_.d_model, w = config_.day_width();
    const double embed_bound = 1.0 / std::sqrt(static_cast<double>(d));
    if (variant_.embedding == EmbeddingKind::CoTrading) {
      bond_table_ = params_.add_uniform("cte.bond", {config_.vocab, d}, embed_bound);
      action_table_ = params_.add_uniform("cte.action", {2, d}, embed_bound);
    } else {
      encoder_embed_ = Affine::create(params_, "encoder.embed", w, d);
      decoder_embed_ = Affine::create(params_, "decoder.embed", w, d);
    }
    start_ = params_.add_uniform("decoder.start", {1, d}, embed_bound);
    for (std::size_t l = 0; l < config_.n_layers; ++l) {
      encoder_.push_back(make_layer("encoder.layer" + std::to_string(l), false));
    }
    for (std::size_t l = 0; l < config_.n_layers; ++l) {
      decoder_.push_back(make_layer("decoder.layer" + std::to_string(l), true));
    }
    head_ = Affine::create(params_, "head", d, w);
    encoder_pe_ = positional_encoding(config_.t_in, d);
    decoder_pe_ = positional_encoding(config_.t_out, d);
  }

  TransformerVariant variant() const { return variant_; }

  /// Gate tensors in layer order, encoder first; empty under LayerNorm.
  std::vector<ad::Tensor> gates() const {
    std::vector<ad::Tensor> out;
    for (const auto* stack : {&encoder_, &decoder_}) {
      for (const auto& layer : *stack) {
        if (layer.gate.mode == GateMode::Scalar) out.push_back(layer.gate.alpha);
        if (layer.gate.mode == GateMode::Vector) out.push_back(layer.gate.v);
      }
    }
    return out;
  }

  /// Day representations [T×d] before positional encoding.
  ad::Tensor embed(const market::BinaryMatrix& days, bool decoder_side) const {
    if (variant_.embedding == EmbeddingKind::CoTrading) return cte_encode_days(days, bond_table_, action_table_);
    return (decoder_side ? decoder_embed_ : encoder_embed_)(to_tensor(days));
  }

  ad::Tensor encode(const market::BinaryMatrix& input, TransformerTrace* trace = nullptr) const {
    check_input(input);
    ad::Tensor x = ad::add(embed(input, false), encoder_pe_);
    if (trace) trace->encoder_input = x;
    for (const auto& layer : encoder_) {
      x = residual(x, ad::multi_head_attention(x, x, layer.self_attention, config_.heads, false), layer, 0);
      x = residual(x, layer.ffn(x), layer, 1);
      if (trace) trace->encoder_layers.push_back(x);
    }
    return x;
  }

  /// Position t of the decoder sees the start vector and `previous` rows
  /// 0..t−1; rows at or after T_out−1 are never read.
  ad::Tensor decode(const ad::Tensor& memory, const market::BinaryMatrix& previous,
                    TransformerTrace* trace = nullptr) const {
    if (previous.rows() != config_.t_out || previous.cols() != config_.day_width()) {
      throw DimensionError("decoder days are " + std::to_string(previous.rows()) + "x" +
                           std::to_string(previous.cols()) + ", expected " + std::to_string(config_.t_out) + "x" +
                           std::to_string(config_.day_width()));
    }
    ad::Tensor x = start_;
    if (config_.t_out > 1) x = ad::concat_rows({start_, embed(previous.slice(0, config_.t_out - 1), true)});
    x = ad::add(x, decoder_pe_);
    if (trace) trace->decoder_input = x;
    for (const auto& layer : decoder_) {
      x = residual(x, ad::multi_head_attention(x, x, layer.self_attention, config_.heads, true), layer, 0);
      x = residual(x, ad::multi_head_attention(x, memory, layer.cross_attention, config_.heads, false), layer, 1);
      x = residual(x, layer.ffn(x), layer, 2);
      if (trace) trace->decoder_layers.push_back(x);
    }
    return squash(head_(x));
  }

  ad::Tensor forward(const market::BinaryMatrix& input, const market::BinaryMatrix* teacher) const override {
    return forward(input, teacher, nullptr);
  }

  ad::Tensor forward(const market::BinaryMatrix& input, const market::BinaryMatrix* teacher,
                     TransformerTrace* trace) const {
    if (teacher == nullptr) throw ContractError("Transformer training pass needs the target days");
    return decode(encode(input, trace), *teacher, trace);
  }

  /// Autoregressive: each predicted day, thresholded, becomes the decoder
  /// input for the next position.
  ad::Tensor infer(const market::BinaryMatrix& input, double threshold = 0.5) const override {
    ad::NoRecord guard;
    const ad::Tensor memory = encode(input);
    market::BinaryMatrix fed(config_.t_out, config_.day_width());
    ad::Tensor probabilities;
    for (std::size_t t = 0; t < config_.t_out; ++t) {
      probabilities = decode(memory, fed);
      if (t + 1 == config_.t_out) break;
      for (std::size_t j = 0; j < fed.cols(); ++j) fed.set(t, j, probabilities.at(t, j) >= threshold);
    }
    return probabilities;
  }

 private:
  detail::Layer make_layer(const std::string& prefix, bool decoder) {
    const std::size_t d = config_.d_model;
    detail::Layer layer;
    layer.self_attention = detail::attention_params(params_, prefix + ".self_attention", d);
    if (decoder) layer.cross_attention = detail::attention_params(params_, prefix + ".cross_attention", d);
    layer.ffn.inner = Affine::create(params_, prefix + ".ffn.inner", d, config_.d_ff);
    layer.ffn.outer = Affine::create(params_, prefix + ".ffn.outer", config_.d_ff, d);
    switch (variant_.residual) {
      case ResidualMode::LayerNorm:
        for (std::size_t s = 0; s < (decoder ? 3u : 2u); ++s) {
          layer.norms.push_back(LayerNormParams::create(params_, prefix + ".norm" + std::to_string(s), d));
        }
        break;
      case ResidualMode::Scalar:
        layer.gate.mode = GateMode::Scalar;
        layer.gate.alpha = params_.add_constant(prefix + ".gate", {1}, 0.0);
        break;
      case ResidualMode::Vector:
        layer.gate.mode = GateMode::Vector;
        layer.gate.v = params_.add_constant(prefix + ".gate", {d}, 0.0);
        break;
    }
    return layer;
  }

  static ad::Tensor residual(const ad::Tensor& x, const ad::Tensor& fx, const detail::Layer& layer,
                             std::size_t sublayer) {
    return residual_block(x, fx, layer.gate, layer.norms.empty() ? nullptr : &layer.norms[sublayer]);
  }

  TransformerVariant variant_;
  ad::Tensor bond_table_, action_table_;
  Affine encoder_embed_, decoder_embed_;
  ad::Tensor start_;
  std::vector<detail::Layer> encoder_, decoder_;
  Affine head_;
  ad::Tensor encoder_pe_, decoder_pe_;
};

}  // namespace dealerpred::models
