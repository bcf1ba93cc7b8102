#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dealerpred/autodiff/tensor.hpp"

namespace dealerpred::ad {

namespace detail {

inline void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + " expects a matrix, got " + shape_string(t.shape()));
  }
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

inline void add_into(Node& target, std::span<const double> delta) {
  if (!target.requires_grad) return;
  for (std::size_t i = 0; i < delta.size(); ++i) target.grad[i] += delta[i];
}

}  // namespace detail

/// C = A·B for A [m×k], B [k×n].
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require_rank2(a, "matmul");
  detail::require_rank2(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner extents differ, " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t t = 0; t < k; ++t) {
      const double s = av[i * k + t];
      if (s == 0.0) continue;
      const double* brow = bv.data() + t * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
    }
  }
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](detail::Node& self) {
    detail::Node& na = *self.inputs[0];
    detail::Node& nb = *self.inputs[1];
    const double* dc = self.grad.data();
    if (na.requires_grad) {
      // dA = dC·Bᵀ
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t t = 0; t < k; ++t) {
          const double* brow = nb.value.data() + t * n;
          const double* crow = dc + i * n;
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += crow[j] * brow[j];
          na.grad[i * k + t] += acc;
        }
      }
    }
    if (nb.requires_grad) {
      // dB = Aᵀ·dC
      for (std::size_t i = 0; i < m; ++i) {
        const double* crow = dc + i * n;
        for (std::size_t t = 0; t < k; ++t) {
          const double s = na.value[i * k + t];
          if (s == 0.0) continue;
          double* grow = nb.grad.data() + t * n;
          for (std::size_t j = 0; j < n; ++j) grow[j] += s * crow[j];
        }
      }
    }
  });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    detail::add_into(*self.inputs[0], self.grad);
    detail::add_into(*self.inputs[1], self.grad);
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    detail::add_into(*self.inputs[0], self.grad);
    detail::Node& nb = *self.inputs[1];
    if (nb.requires_grad) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) nb.grad[i] -= self.grad[i];
    }
  });
}

/// Pointwise (Hadamard) product.
inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    detail::Node& na = *self.inputs[0];
    detail::Node& nb = *self.inputs[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (na.requires_grad) na.grad[i] += self.grad[i] * nb.value[i];
      if (nb.requires_grad) nb.grad[i] += self.grad[i] * na.value[i];
    }
  });
}

inline Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.values()[i]);
  return make_result(a.shape(), std::move(out), {a}, [](detail::Node& self) {
    detail::Node& na = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double y = self.value[i];
      na.grad[i] += self.grad[i] * (1.0 - y * y);
    }
  });
}

inline Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-a.values()[i]));
  return make_result(a.shape(), std::move(out), {a}, [](detail::Node& self) {
    detail::Node& na = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double y = self.value[i];
      na.grad[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

/// Multiply by a constant.
inline Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * factor;
  return make_result(a.shape(), std::move(out), {a}, [factor](detail::Node& self) {
    detail::Node& na = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) na.grad[i] += self.grad[i] * factor;
  });
}

/// Add a constant to every element.
inline Tensor add_scalar(const Tensor& a, double offset) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + offset;
  return make_result(a.shape(), std::move(out), {a},
                     [](detail::Node& self) { detail::add_into(*self.inputs[0], self.grad); });
}

enum class Pointwise { Add, Sub, Mul, Tanh, Scale };

/// Single entry point over the pointwise family. Binary kinds need equal
/// shapes; Scale multiplies by `factor`.
inline Tensor elementwise(Pointwise kind, const Tensor& a, const std::optional<Tensor>& b = std::nullopt,
                          double factor = 1.0) {
  auto rhs = [&]() -> const Tensor& {
    if (!b) throw ContractError("binary pointwise op needs a second operand");
    return *b;
  };
  switch (kind) {
    case Pointwise::Add: return add(a, rhs());
    case Pointwise::Sub: return sub(a, rhs());
    case Pointwise::Mul: return mul(a, rhs());
    case Pointwise::Tanh: return tanh(a);
    case Pointwise::Scale: return scale(a, factor);
  }
  throw ContractError("unknown pointwise kind");
}

/// x [T×d] + b [d], b broadcast over rows.
inline Tensor add_rowwise(const Tensor& x, const Tensor& b) {
  detail::require_rank2(x, "add_rowwise");
  const std::size_t rows = x.shape()[0], d = x.shape()[1];
  if (b.size() != d) {
    throw DimensionError("add_rowwise: " + shape_string(x.shape()) + " with " + shape_string(b.shape()));
  }
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] = x.values()[r * d + c] + b.values()[c];
  }
  return make_result(x.shape(), std::move(out), {x, b}, [rows, d](detail::Node& self) {
    detail::add_into(*self.inputs[0], self.grad);
    detail::Node& nb = *self.inputs[1];
    if (!nb.requires_grad) return;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < d; ++c) nb.grad[c] += self.grad[r * d + c];
    }
  });
}

/// x [T×d] ⊙ v [d], v broadcast over rows.
inline Tensor mul_rowwise(const Tensor& x, const Tensor& v) {
  detail::require_rank2(x, "mul_rowwise");
  const std::size_t rows = x.shape()[0], d = x.shape()[1];
  if (v.size() != d) {
    throw DimensionError("mul_rowwise: " + shape_string(x.shape()) + " with " + shape_string(v.shape()));
  }
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] = v.values()[c] * x.values()[r * d + c];
  }
  return make_result(x.shape(), std::move(out), {x, v}, [rows, d](detail::Node& self) {
    detail::Node& nx = *self.inputs[0];
    detail::Node& nv = *self.inputs[1];
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        const double g = self.grad[r * d + c];
        if (nx.requires_grad) nx.grad[r * d + c] += g * nv.value[c];
        if (nv.requires_grad) nv.grad[c] += g * nx.value[r * d + c];
      }
    }
  });
}

/// x · alpha for a one-element tensor alpha.
inline Tensor scale_by(const Tensor& x, const Tensor& alpha) {
  if (alpha.size() != 1) throw DimensionError("scale_by: factor must be scalar, got " + shape_string(alpha.shape()));
  const double s = alpha.values()[0];
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * x.values()[i];
  return make_result(x.shape(), std::move(out), {x, alpha}, [](detail::Node& self) {
    detail::Node& nx = *self.inputs[0];
    detail::Node& na = *self.inputs[1];
    const double s = na.value[0];
    double acc = 0.0;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (nx.requires_grad) nx.grad[i] += self.grad[i] * s;
      acc += self.grad[i] * nx.value[i];
    }
    if (na.requires_grad) na.grad[0] += acc;
  });
}

/// Sum of all elements, shape [1].
inline Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  return make_result({1}, {total}, {a}, [](detail::Node& self) {
    detail::Node& na = *self.inputs[0];
    for (double& g : na.grad) g += self.grad[0];
  });
}

/// Column sums of x [T×d], shape [d].
inline Tensor sum_rows(const Tensor& x) {
  detail::require_rank2(x, "sum_rows");
  const std::size_t rows = x.shape()[0], d = x.shape()[1];
  std::vector<double> out(d, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) out[c] += x.values()[r * d + c];
  }
  return make_result({d}, std::move(out), {x}, [rows, d](detail::Node& self) {
    detail::Node& nx = *self.inputs[0];
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < d; ++c) nx.grad[r * d + c] += self.grad[c];
    }
  });
}

inline Tensor reshape(const Tensor& a, Shape shape) {
  detail::check_shape(shape, a.size());
  std::vector<double> out(a.values().begin(), a.values().end());
  return make_result(std::move(shape), std::move(out), {a},
                     [](detail::Node& self) { detail::add_into(*self.inputs[0], self.grad); });
}

/// Rows [begin, begin+count) of a matrix.
inline Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  detail::require_rank2(x, "slice_rows");
  const std::size_t d = x.shape()[1];
  if (count == 0 || begin + count > x.shape()[0]) {
    throw IndexError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") outside " + shape_string(x.shape()));
  }
  std::vector<double> out(x.values().begin() + begin * d, x.values().begin() + (begin + count) * d);
  return make_result({count, d}, std::move(out), {x}, [begin, d](detail::Node& self) {
    detail::Node& nx = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) nx.grad[begin * d + i] += self.grad[i];
  });
}

/// Columns [begin, begin+count) of a matrix.
inline Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  detail::require_rank2(x, "slice_cols");
  const std::size_t rows = x.shape()[0], d = x.shape()[1];
  if (count == 0 || begin + count > d) {
    throw IndexError("slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") outside " + shape_string(x.shape()));
  }
  std::vector<double> out(rows * count);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.values().begin() + r * d + begin, count, out.begin() + r * count);
  }
  return make_result({rows, count}, std::move(out), {x}, [rows, d, begin, count](detail::Node& self) {
    detail::Node& nx = *self.inputs[0];
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < count; ++c) nx.grad[r * d + begin + c] += self.grad[r * count + c];
    }
  });
}

/// Stacks matrices (or vectors, as single rows) with equal column counts.
inline Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_rows of nothing");
  const std::size_t d = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != d || p.rank() > 2) {
      throw DimensionError("concat_rows: " + shape_string(p.shape()) + " does not have " + std::to_string(d) +
                           " columns");
    }
    rows += p.rows();
  }
  std::vector<double> out;
  out.reserve(rows * d);
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  return make_result({rows, d}, std::move(out), parts, [](detail::Node& self) {
    std::size_t offset = 0;
    for (auto& in : self.inputs) {
      const std::size_t n = in->value.size();
      if (in->requires_grad) {
        for (std::size_t i = 0; i < n; ++i) in->grad[i] += self.grad[offset + i];
      }
      offset += n;
    }
  });
}

/// Side-by-side join of matrices with equal row counts.
inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_cols of nothing");
  const std::size_t rows = parts.front().rows();
  std::size_t d = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows || p.rank() > 2) {
      throw DimensionError("concat_cols: " + shape_string(p.shape()) + " does not have " +
                           std::to_string(rows) + " rows");
    }
    d += p.cols();
  }
  std::vector<double> out(rows * d);
  std::vector<std::size_t> widths;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.cols();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(p.values().begin() + r * w, w, out.begin() + r * d + offset);
    }
    widths.push_back(w);
    offset += w;
  }
  return make_result({rows, d}, std::move(out), parts, [rows, d, widths](detail::Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      detail::Node& in = *self.inputs[k];
      const std::size_t w = widths[k];
      if (in.requires_grad) {
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < w; ++c) in.grad[r * w + c] += self.grad[r * d + offset + c];
        }
      }
      offset += w;
    }
  });
}

/// One bag per output row: row b = Σ table[i] over i in bags[b], summed in
/// ascending index order. Empty bags give zero rows.
inline Tensor embedding_bags(const Tensor& table, const std::vector<std::vector<std::size_t>>& bags) {
  detail::require_rank2(table, "embedding_bag");
  const std::size_t vocab = table.shape()[0], d = table.shape()[1];
  std::vector<std::vector<std::size_t>> sorted = bags;
  for (auto& bag : sorted) {
    std::sort(bag.begin(), bag.end());
    for (std::size_t idx : bag) {
      if (idx >= vocab) {
        throw IndexError("embedding_bag: index " + std::to_string(idx) + " out of range for vocabulary of " +
                         std::to_string(vocab));
      }
    }
  }
  if (sorted.empty()) throw ContractError("embedding_bags needs at least one bag");
  std::vector<double> out(sorted.size() * d, 0.0);
  for (std::size_t b = 0; b < sorted.size(); ++b) {
    for (std::size_t idx : sorted[b]) {
      for (std::size_t c = 0; c < d; ++c) out[b * d + c] += table.values()[idx * d + c];
    }
  }
  return make_result({sorted.size(), d}, std::move(out), {table}, [sorted, d](detail::Node& self) {
    detail::Node& nt = *self.inputs[0];
    for (std::size_t b = 0; b < sorted.size(); ++b) {
      for (std::size_t idx : sorted[b]) {
        for (std::size_t c = 0; c < d; ++c) nt.grad[idx * d + c] += self.grad[b * d + c];
      }
    }
  });
}

/// Σ table[i] for i in indices, shape [d].
inline Tensor embedding_bag(const Tensor& table, const std::vector<std::size_t>& indices) {
  Tensor rows = embedding_bags(table, {indices});
  return reshape(rows, {table.shape()[1]});
}

/// Per-row normalization over the last axis with population variance,
/// followed by the affine map gamma·x̂ + beta.
inline Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5) {
  const std::size_t d = x.cols();
  if (gamma.size() != d || beta.size() != d) {
    throw DimensionError("layer_norm: input " + shape_string(x.shape()) + " with gamma " +
                         shape_string(gamma.shape()) + ", beta " + shape_string(beta.shape()));
  }
  const std::size_t rows = x.size() / d;
  std::vector<double> out(x.size());
  std::vector<double> normalized(x.size());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.values().data() + r * d;
    double mean = 0.0;
    for (std::size_t c = 0; c < d; ++c) mean += xr[c];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      normalized[r * d + c] = (xr[c] - mean) * inv_std[r];
      out[r * d + c] = gamma.values()[c] * normalized[r * d + c] + beta.values()[c];
    }
  }
  return make_result(x.shape(), std::move(out), {x, gamma, beta},
                     [rows, d, normalized = std::move(normalized), inv_std = std::move(inv_std)](detail::Node& self) {
                       detail::Node& nx = *self.inputs[0];
                       detail::Node& ng = *self.inputs[1];
                       detail::Node& nb = *self.inputs[2];
                       const double inv_d = 1.0 / static_cast<double>(d);
                       for (std::size_t r = 0; r < rows; ++r) {
                         const double* dy = self.grad.data() + r * d;
                         const double* xh = normalized.data() + r * d;
                         double mean_dxh = 0.0, mean_dxh_xh = 0.0;
                         for (std::size_t c = 0; c < d; ++c) {
                           const double dxh = dy[c] * ng.value[c];
                           mean_dxh += dxh;
                           mean_dxh_xh += dxh * xh[c];
                           if (ng.requires_grad) ng.grad[c] += dy[c] * xh[c];
                           if (nb.requires_grad) nb.grad[c] += dy[c];
                         }
                         mean_dxh *= inv_d;
                         mean_dxh_xh *= inv_d;
                         if (!nx.requires_grad) continue;
                         for (std::size_t c = 0; c < d; ++c) {
                           const double dxh = dy[c] * ng.value[c];
                           nx.grad[r * d + c] += inv_std[r] * (dxh - mean_dxh - xh[c] * mean_dxh_xh);
                         }
                       }
                     });
}

/// Mean of squared differences, shape [1].
inline Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  detail::require_same_shape(pred, target, "mse_loss");
  const std::size_t n = pred.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = pred.values()[i] - target.values()[i];
    total += diff * diff;
  }
  return make_result({1}, {total / static_cast<double>(n)}, {pred, target}, [n](detail::Node& self) {
    detail::Node& np = *self.inputs[0];
    detail::Node& nt = *self.inputs[1];
    const double g = self.grad[0] * 2.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = np.value[i] - nt.value[i];
      if (np.requires_grad) np.grad[i] += g * diff;
      if (nt.requires_grad) nt.grad[i] -= g * diff;
    }
  });
}

}  // namespace dealerpred::ad
