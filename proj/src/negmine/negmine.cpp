#include "nmt/negmine/negmine.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "nmt/error.hpp"
#include "nmt/numcore/ops.hpp"

namespace nmt::neg {

using num::Tensor;
using num::Var;

LabelIndex::LabelIndex(std::span<const std::pair<std::string, std::size_t>> entries) {
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return entries[a].second < entries[b].second; });
  ids_.reserve(entries.size());
  labels_.reserve(entries.size());
  for (std::size_t i : order) {
    ids_.push_back(entries[i].first);
    labels_.push_back(entries[i].second);
  }
}

namespace {
std::vector<std::pair<std::string, std::size_t>> entries_of(std::span<const seq::LabeledExample> examples) {
  std::vector<std::pair<std::string, std::size_t>> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.emplace_back(e.seq.id, e.label);
  return out;
}
}  // namespace

LabelIndex::LabelIndex(std::span<const seq::LabeledExample> examples) : LabelIndex(entries_of(examples)) {}

std::pair<std::size_t, std::size_t> LabelIndex::range(std::size_t label) const {
  auto lo = std::lower_bound(labels_.begin(), labels_.end(), label);
  auto hi = std::upper_bound(lo, labels_.end(), label);
  return {static_cast<std::size_t>(lo - labels_.begin()), static_cast<std::size_t>(hi - labels_.begin())};
}

std::size_t LabelIndex::others(std::size_t label) const {
  auto [lo, hi] = range(label);
  return ids_.size() - (hi - lo);
}

const std::string& LabelIndex::other(std::size_t label, std::size_t k) const {
  auto [lo, hi] = range(label);
  return ids_[k < lo ? k : k + (hi - lo)];
}

NegativeSet sample_negatives_wise(const LabelIndex& index, const seq::LabeledExample& anchor, std::size_t n,
                                  std::mt19937_64& rng) {
  const std::size_t pool = index.others(anchor.label);
  if (pool == 0) {
    fail(ErrorKind::NoNegativesAvailable, "no example with a label other than " + std::to_string(anchor.label) +
                                              " for anchor '" + anchor.seq.id + "'");
  }
  NegativeSet out{anchor.seq.id, {}};
  out.negatives.reserve(n);
  if (pool >= n) {
    // Partial Fisher-Yates over the virtual index range [0, pool).
    std::unordered_map<std::size_t, std::size_t> swapped;
    auto at = [&](std::size_t i) {
      auto it = swapped.find(i);
      return it == swapped.end() ? i : it->second;
    };
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(i, pool - 1)(rng);
      const std::size_t pick = at(j);
      swapped[j] = at(i);
      out.negatives.push_back(index.other(anchor.label, pick));
    }
  } else {
    std::uniform_int_distribution<std::size_t> dist(0, pool - 1);
    for (std::size_t i = 0; i < n; ++i) out.negatives.push_back(index.other(anchor.label, dist(rng)));
  }
  return out;
}

std::vector<std::size_t> negative_pair_positions(std::span<const seq::PairExample> batch) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].label == 0) out.push_back(i);
  }
  return out;
}

std::vector<seq::PairExample> sample_negatives_pair(std::span<const seq::PairExample> batch) {
  std::vector<seq::PairExample> out;
  for (std::size_t i : negative_pair_positions(batch)) out.push_back(batch[i]);
  return out;
}

template <typename T>
CrossAttention<T> cross_attention(Var<T> e_n, Var<T> e_g, const ProjectionParams<T>& proj,
                                  const std::vector<bool>* row_valid, const std::vector<bool>* col_valid, bool scale,
                                  bool trainable) {
  const Tensor<T>& en = e_n.value();
  const Tensor<T>& eg = e_g.value();
  if (en.rank() != 2 || eg.rank() != 2 || en.cols() != eg.cols() || en.cols() != proj.dim()) {
    fail(ErrorKind::ShapeError, "cross_attention: embeddings " + num::shape_string(en.shape()) + " and " +
                                    num::shape_string(eg.shape()) + " vs projection width " +
                                    std::to_string(proj.dim()));
  }
  const std::size_t l = en.rows(), m = eg.rows();
  CrossAttention<T> out;
  out.row_valid = row_valid ? *row_valid : std::vector<bool>(l, true);
  out.col_valid = col_valid ? *col_valid : std::vector<bool>(m, true);
  if (out.row_valid.size() != l || out.col_valid.size() != m) {
    fail(ErrorKind::ShapeError, "cross_attention: mask length does not match sequence length");
  }
  out.mask = num::Mask::outer(out.row_valid, out.col_valid);

  auto& tape = *e_n.tape();
  Var<T> k_g = num::matmul(e_g, leaf(tape, proj.key, trainable));
  Var<T> q_n = num::matmul(e_n, leaf(tape, proj.neg_query, trainable));
  Var<T> logits = num::matmul_nt(q_n, k_g);
  if (scale) logits = num::scale(logits, T(1) / std::sqrt(static_cast<T>(proj.key_dim())));
  out.att = num::softmax_rows(logits, &out.mask, num::EmptyRow::Zero);
  return out;
}

template <typename T>
Tensor<T> uniform_target(const std::vector<bool>& row_valid, const std::vector<bool>& col_valid) {
  const auto valid_cols = static_cast<std::size_t>(std::count(col_valid.begin(), col_valid.end(), true));
  const bool any_row = std::find(row_valid.begin(), row_valid.end(), true) != row_valid.end();
  if (any_row && valid_cols == 0) fail(ErrorKind::DegenerateRow, "uniform_target: no valid column");
  Tensor<T> u({row_valid.size(), col_valid.size()});
  if (!any_row) return u;
  const T value = T(1) / static_cast<T>(valid_cols);
  for (std::size_t r = 0; r < row_valid.size(); ++r) {
    if (!row_valid[r]) continue;
    for (std::size_t c = 0; c < col_valid.size(); ++c) {
      if (col_valid[c]) u(r, c) = value;
    }
  }
  return u;
}

template <typename T>
Var<T> negative_loss(num::Tape<T>& tape, std::span<const CrossAttention<T>> atts, std::span<const Tensor<T>> targets) {
  if (atts.size() != targets.size()) {
    fail(ErrorKind::ShapeError, "negative_loss: " + std::to_string(atts.size()) + " attention matrices but " +
                                    std::to_string(targets.size()) + " targets");
  }
  if (atts.empty()) return tape.constant(Tensor<T>({1}));
  std::vector<Var<T>> terms;
  terms.reserve(atts.size());
  for (std::size_t i = 0; i < atts.size(); ++i) {
    if (atts[i].att.value().shape() != targets[i].shape()) {
      fail(ErrorKind::ShapeError, "negative_loss: attention " + num::shape_string(atts[i].att.value().shape()) +
                                      " vs target " + num::shape_string(targets[i].shape()));
    }
    terms.push_back(num::mse(atts[i].att, targets[i], &atts[i].mask));
  }
  return terms.size() == 1 ? terms.front() : num::add_all(terms);
}

template <typename T>
Var<T> negative_loss(num::Tape<T>& tape, std::span<const CrossAttention<T>> atts) {
  std::vector<Tensor<T>> targets;
  targets.reserve(atts.size());
  for (const auto& a : atts) targets.push_back(uniform_target<T>(a.row_valid, a.col_valid));
  return negative_loss(tape, atts, std::span<const Tensor<T>>(targets));
}

#define NMT_INSTANTIATE(T)                                                                                         \
  template CrossAttention<T> cross_attention<T>(Var<T>, Var<T>, const ProjectionParams<T>&,                        \
                                                const std::vector<bool>*, const std::vector<bool>*, bool, bool);   \
  template Tensor<T> uniform_target<T>(const std::vector<bool>&, const std::vector<bool>&);                       \
  template Var<T> negative_loss<T>(num::Tape<T>&, std::span<const CrossAttention<T>>, std::span<const Tensor<T>>); \
  template Var<T> negative_loss<T>(num::Tape<T>&, std::span<const CrossAttention<T>>);

NMT_INSTANTIATE(float)
NMT_INSTANTIATE(double)
#undef NMT_INSTANTIATE

}  // namespace nmt::neg
