#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "nmt/numcore/tape.hpp"
#include "nmt/numcore/tensor.hpp"

// Differentiable operations recorded on a Tape. Matrices are rank-2;
// vectors are rank-1. All inputs must live on the same tape.

namespace nmt::num {

/// How softmax_rows treats a row with no valid entry.
enum class EmptyRow {
  Error,  ///< throw DegenerateRow
  Zero,   ///< emit an all-zero row (used for padded query rows)
};

/// [p x q] * [q x r]
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);

/// [p x q] * [r x q]^T
template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);

template <typename T>
Var<T> sub(Var<T> a, Var<T> b);

/// Elementwise product.
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);

/// Adds a rank-1 bias of width c to every row of an [r x c] matrix.
template <typename T>
Var<T> add_row(Var<T> m, Var<T> bias);

template <typename T>
Var<T> scale(Var<T> a, T factor);

/// Tanh-approximated GELU.
template <typename T>
Var<T> gelu(Var<T> a);

/// Per-row layer normalization with affine gamma/beta of width c.
template <typename T>
Var<T> layer_norm_rows(Var<T> x, Var<T> gamma, Var<T> beta, T eps = T(1e-5));

/// Row-wise softmax over the last axis. Masked-out entries are exactly 0.
/// The row maximum over valid entries is subtracted before exponentiation.
template <typename T>
Var<T> softmax_rows(Var<T> m, const Mask* mask = nullptr, EmptyRow empty = EmptyRow::Error);

/// Mean over the valid rows of an [r x c] matrix; result has shape [c].
template <typename T>
Var<T> mean_pool_rows(Var<T> m, const std::vector<bool>* row_valid = nullptr);

/// Sum of all entries, shape [1].
template <typename T>
Var<T> sum(Var<T> a);

/// Mean squared error against a constant target, shape [1]. With a mask the
/// mean runs over valid entries only.
template <typename T>
Var<T> mse(Var<T> a, const Tensor<T>& target, const Mask* mask = nullptr);

/// W * h + b for h of shape [d], W of shape [C x d], b of shape [C].
template <typename T>
Var<T> linear(Var<T> h, Var<T> weight, Var<T> bias);

/// Cross-entropy of softmax(logits) against class `label`, via log-sum-exp.
template <typename T>
Var<T> cross_entropy(Var<T> logits, std::size_t label);

/// Concatenation of two rank-1 vectors, a first.
template <typename T>
Var<T> concat(Var<T> a, Var<T> b);

/// Rows of a [V x d] table selected by index; result [n x d].
template <typename T>
Var<T> gather_rows(Var<T> table, std::span<const std::size_t> indices);

template <typename T>
Var<T> slice_cols(Var<T> m, std::size_t begin, std::size_t count);

template <typename T>
Var<T> concat_cols(std::span<const Var<T>> parts);

/// Sum of scalar [1] values in order.
template <typename T>
Var<T> add_all(std::span<const Var<T>> scalars);

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  return concat_cols(std::span<const Var<T>>(parts));
}

template <typename T>
Var<T> add_all(const std::vector<Var<T>>& scalars) {
  return add_all(std::span<const Var<T>>(scalars));
}

/// Plain (non-recorded) helpers shared by ops and tests.
template <typename T>
Tensor<T> matmul_values(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> softmax_rows_values(const Tensor<T>& m, const Mask* mask = nullptr, EmptyRow empty = EmptyRow::Error);

}  // namespace nmt::num
