#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "nmt/negmine/projection.hpp"
#include "nmt/numcore/tape.hpp"
#include "nmt/numcore/tensor.hpp"

namespace nmt::head {

using neg::ProjectionParams;

/// Single affine layer: logits = W h + b.
template <typename T>
struct ClassifierParams {
  num::Parameter<T> weight;  // C x input width
  num::Parameter<T> bias;    // C

  std::size_t classes() const { return weight.value.rows(); }
  std::size_t input_width() const { return weight.value.cols(); }

  std::vector<num::Parameter<T>*> parameters() { return {&weight, &bias}; }
  std::vector<const num::Parameter<T>*> parameters() const { return {&weight, &bias}; }

  template <typename U>
  ClassifierParams<U> cast() const {
    return {{weight.name, weight.value.template cast<U>()}, {bias.name, bias.value.template cast<U>()}};
  }

  static ClassifierParams init(std::size_t classes, std::size_t input_width, std::mt19937_64& rng);
};

/// Row-stochastic m x m softmax(Q K^T / sqrt(d_k)) over valid residues;
/// rows and columns of invalid residues are 0.
template <typename T>
num::Var<T> self_attention(num::Var<T> e_g, const ProjectionParams<T>& proj,
                           const std::vector<bool>* row_valid = nullptr, bool trainable = true);

/// MeanPool(softmax(Q K^T / sqrt(d_k)) V) with Q, K, V projections of e_g;
/// K uses the shared key projection. Invalid rows are excluded both as keys
/// and from pooling.
template <typename T>
num::Var<T> self_attend_pool(num::Var<T> e_g, const ProjectionParams<T>& proj,
                             const std::vector<bool>* row_valid = nullptr, bool trainable = true);

template <typename T>
num::Var<T> classify(num::Var<T> h, const ClassifierParams<T>& params, bool trainable = true);

template <typename T>
struct Classification {
  num::Var<T> logits;
  num::Var<T> loss;
};

/// Logits and their cross-entropy against y (LabelOutOfRange if y >= C).
template <typename T>
Classification<T> classify_and_loss(num::Var<T> h, const ClassifierParams<T>& params, std::size_t y,
                                    bool trainable = true);

/// h_a followed by h_b; widths must match.
template <typename T>
num::Var<T> pair_representation(num::Var<T> h_a, num::Var<T> h_b);

struct LossValues {
  double supervised = 0;
  double negative = 0;
  double total = 0;
};

/// total = l_s + lambda * l_n; NumericalError on non-finite input.
LossValues total_loss(double l_s, double l_n, double lambda = 1.0);

template <typename T>
struct LossBundle {
  num::Var<T> supervised;
  num::Var<T> negative;
  num::Var<T> total;

  LossValues values() const {
    return {double(supervised.value()[0]), double(negative.value()[0]), double(total.value()[0])};
  }
};

template <typename T>
LossBundle<T> total_loss(num::Var<T> l_s, num::Var<T> l_n, T lambda = T(1));

/// Plain attention values with their validity masks, for export.
struct AttentionMatrix {
  num::Tensor<double> values;  // l x m: query rows, key columns
  std::vector<bool> row_valid;
  std::vector<bool> col_valid;
};

/// Per key residue: mean attention received over the valid query rows.
/// Sums to 1 over valid keys for a row-stochastic matrix.
std::vector<double> response_scores(const AttentionMatrix& att);

/// The k best (index, score) pairs, descending, ties to the lower index;
/// k is clipped to the number of scores. ConfigError for k == 0.
std::vector<std::pair<std::size_t, double>> top_k_residues(std::span<const double> scores, std::size_t k);

}  // namespace nmt::head
