#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "dealerpred/autodiff/ops.hpp"

namespace dealerpred::ad {

namespace detail {

// Row-wise softmax of the scaled head scores. With `causal`, row i only
// covers columns 0..i; masked entries are exactly zero.
inline void head_probabilities(const double* q, const double* k, std::size_t tq, std::size_t tk,
                               std::size_t stride, std::size_t offset, std::size_t dk, bool causal,
                               double* probs) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  for (std::size_t i = 0; i < tq; ++i) {
    const std::size_t visible = causal ? std::min(i + 1, tk) : tk;
    double* row = probs + i * tk;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < visible; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < dk; ++c) s += q[i * stride + offset + c] * k[j * stride + offset + c];
      row[j] = s * scale;
      peak = std::max(peak, row[j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < visible; ++j) {
      row[j] = std::exp(row[j] - peak);
      total += row[j];
    }
    for (std::size_t j = 0; j < visible; ++j) row[j] /= total;
    for (std::size_t j = visible; j < tk; ++j) row[j] = 0.0;
  }
}

inline void check_attention_shapes(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads) {
  require_rank2(q, "attention");
  require_rank2(k, "attention");
  require_rank2(v, "attention");
  const std::size_t d = q.shape()[1];
  if (k.shape()[1] != d || v.shape()[1] != d || k.shape()[0] != v.shape()[0]) {
    throw DimensionError("attention: query " + shape_string(q.shape()) + ", key " + shape_string(k.shape()) +
                         ", value " + shape_string(v.shape()));
  }
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("attention: model width " + std::to_string(d) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
}

}  // namespace detail

/// Attention weights per head, laid out [heads][T_q][T_k].
inline std::vector<double> attention_weights(const Tensor& q, const Tensor& k, std::size_t heads, bool causal) {
  detail::check_attention_shapes(q, k, k, heads);
  const std::size_t tq = q.shape()[0], tk = k.shape()[0], d = q.shape()[1], dk = d / heads;
  std::vector<double> probs(heads * tq * tk);
  for (std::size_t h = 0; h < heads; ++h) {
    detail::head_probabilities(q.values().data(), k.values().data(), tq, tk, d, h * dk, dk, causal,
                               probs.data() + h * tq * tk);
  }
  return probs;
}

/// softmax(Q_h K_hᵀ / √d_k) V_h for each head slice h, concatenated back to
/// [T_q × d]. Q, K, V are already projected.
inline Tensor scaled_dot_product_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                                           bool causal) {
  detail::check_attention_shapes(q, k, v, heads);
  const std::size_t tq = q.shape()[0], tk = k.shape()[0], d = q.shape()[1], dk = d / heads;
  std::vector<double> probs = attention_weights(q, k, heads, causal);
  std::vector<double> out(tq * d, 0.0);
  for (std::size_t h = 0; h < heads; ++h) {
    const double* p = probs.data() + h * tq * tk;
    for (std::size_t i = 0; i < tq; ++i) {
      for (std::size_t j = 0; j < tk; ++j) {
        const double w = p[i * tk + j];
        if (w == 0.0) continue;
        for (std::size_t c = 0; c < dk; ++c) out[i * d + h * dk + c] += w * v.values()[j * d + h * dk + c];
      }
    }
  }
  return make_result({tq, d}, std::move(out), {q, k, v},
                     [tq, tk, d, dk, heads, probs = std::move(probs)](detail::Node& self) {
                       detail::Node& nq = *self.inputs[0];
                       detail::Node& nk = *self.inputs[1];
                       detail::Node& nv = *self.inputs[2];
                       const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
                       std::vector<double> dp(tk), ds(tk);
                       for (std::size_t h = 0; h < heads; ++h) {
                         const double* p = probs.data() + h * tq * tk;
                         const std::size_t off = h * dk;
                         for (std::size_t i = 0; i < tq; ++i) {
                           const double* dout = self.grad.data() + i * d + off;
                           double weighted = 0.0;
                           for (std::size_t j = 0; j < tk; ++j) {
                             const double w = p[i * tk + j];
                             double acc = 0.0;
                             for (std::size_t c = 0; c < dk; ++c) acc += dout[c] * nv.value[j * d + off + c];
                             dp[j] = acc;
                             weighted += w * acc;
                             if (nv.requires_grad && w != 0.0) {
                               for (std::size_t c = 0; c < dk; ++c) nv.grad[j * d + off + c] += w * dout[c];
                             }
                           }
                           for (std::size_t j = 0; j < tk; ++j) ds[j] = p[i * tk + j] * (dp[j] - weighted) * scale;
                           for (std::size_t j = 0; j < tk; ++j) {
                             if (ds[j] == 0.0) continue;
                             for (std::size_t c = 0; c < dk; ++c) {
                               if (nq.requires_grad) nq.grad[i * d + off + c] += ds[j] * nk.value[j * d + off + c];
                               if (nk.requires_grad) nk.grad[j * d + off + c] += ds[j] * nq.value[i * d + off + c];
                             }
                           }
                         }
                       }
                     });
}

/// Projection weights of one multi-head attention block.
struct AttentionWeights {
  Tensor query, key, value, output;                       // [d×d]
  Tensor query_bias, key_bias, value_bias, output_bias;  // [d]
};

/// Projects `queries` and `memory` into per-head subspaces, attends, and
/// applies the output projection. Self-attention passes the same tensor
/// twice; `causal` keeps row i from seeing memory rows after i.
inline Tensor multi_head_attention(const Tensor& queries, const Tensor& memory, const AttentionWeights& w,
                                   std::size_t heads, bool causal) {
  if (heads == 0 || queries.cols() % heads != 0) {
    throw ConfigError("multi_head_attention: model width " + std::to_string(queries.cols()) +
                      " is not divisible by " + std::to_string(heads) + " heads");
  }
  Tensor q = add_rowwise(matmul(queries, w.query), w.query_bias);
  Tensor k = add_rowwise(matmul(memory, w.key), w.key_bias);
  Tensor v = add_rowwise(matmul(memory, w.value), w.value_bias);
  Tensor context = scaled_dot_product_attention(q, k, v, heads, causal);
  return add_rowwise(matmul(context, w.output), w.output_bias);
}

}  // namespace dealerpred::ad
