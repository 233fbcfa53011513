#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nmt/negmine/projection.hpp"
#include "nmt/numcore/tape.hpp"
#include "nmt/numcore/tensor.hpp"
#include "nmt/seqdata/seqdata.hpp"

namespace nmt::neg {

/// Dataset ids grouped by label. Ids keep dataset order within a label.
class LabelIndex {
 public:
  LabelIndex() = default;
  explicit LabelIndex(std::span<const std::pair<std::string, std::size_t>> entries);
  explicit LabelIndex(std::span<const seq::LabeledExample> examples);

  std::size_t size() const noexcept { return ids_.size(); }
  /// Number of entries whose label differs from `label`.
  std::size_t others(std::size_t label) const;
  /// k-th id (0-based) among entries whose label differs from `label`.
  const std::string& other(std::size_t label, std::size_t k) const;
  std::size_t label_of_entry(std::size_t flat) const { return labels_[flat]; }

 private:
  std::pair<std::size_t, std::size_t> range(std::size_t label) const;

  std::vector<std::string> ids_;      // sorted by label, stable
  std::vector<std::size_t> labels_;   // parallel to ids_
};

struct NegativeSet {
  std::string anchor;
  std::vector<std::string> negatives;
};

/// N ids drawn uniformly from every label other than the anchor's: without
/// replacement when enough exist, with replacement otherwise. The anchor
/// itself is never returned.
NegativeSet sample_negatives_wise(const LabelIndex& index, const seq::LabeledExample& anchor, std::size_t n,
                                  std::mt19937_64& rng);

/// The label-0 pairs of a batch, in batch order.
std::vector<seq::PairExample> sample_negatives_pair(std::span<const seq::PairExample> batch);

/// Positions of the label-0 pairs, in batch order.
std::vector<std::size_t> negative_pair_positions(std::span<const seq::PairExample> batch);

/// Indirection so the trainer's sampler use can be observed.
class NegativeSampler {
 public:
  virtual ~NegativeSampler() = default;
  virtual NegativeSet wise(const LabelIndex& index, const seq::LabeledExample& anchor, std::size_t n,
                           std::mt19937_64& rng) const {
    return sample_negatives_wise(index, anchor, n, rng);
  }
  virtual std::vector<std::size_t> pair(std::span<const seq::PairExample> batch) const {
    return negative_pair_positions(batch);
  }
};

/// Row-stochastic l x m matrix: rows are query residues of the negative
/// sequence, columns are key residues of the input sequence.
template <typename T>
struct CrossAttention {
  num::Var<T> att;
  num::Mask mask;  // outer(row_valid, col_valid)
  std::vector<bool> row_valid;
  std::vector<bool> col_valid;
};

/// K_g = E_g W^K, Q_n = E_n W_n^Q, softmax over valid key columns of
/// Q_n K_g^T (optionally scaled by 1/sqrt(d_k)). Invalid query rows are 0.
/// Null masks mean every row/column is valid.
template <typename T>
CrossAttention<T> cross_attention(num::Var<T> e_n, num::Var<T> e_g, const ProjectionParams<T>& proj,
                                  const std::vector<bool>* row_valid = nullptr,
                                  const std::vector<bool>* col_valid = nullptr, bool scale = false,
                                  bool trainable = true);

/// 1/(valid column count) on valid entries of valid rows, 0 elsewhere.
template <typename T>
num::Tensor<T> uniform_target(const std::vector<bool>& row_valid, const std::vector<bool>& col_valid);

/// Sum over negatives of the masked MSE between each attention matrix and
/// its target. An empty list gives 0.
template <typename T>
num::Var<T> negative_loss(num::Tape<T>& tape, std::span<const CrossAttention<T>> atts,
                          std::span<const num::Tensor<T>> targets);

/// negative_loss against each matrix's own uniform target.
template <typename T>
num::Var<T> negative_loss(num::Tape<T>& tape, std::span<const CrossAttention<T>> atts);

}  // namespace nmt::neg
