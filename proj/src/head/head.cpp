#include "nmt/head/head.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nmt/error.hpp"
#include "nmt/numcore/ops.hpp"

namespace nmt::head {

using num::Tensor;
using num::Var;

template <typename T>
ClassifierParams<T> ClassifierParams<T>::init(std::size_t classes, std::size_t input_width, std::mt19937_64& rng) {
  if (classes < 2) fail(ErrorKind::ConfigError, "classifier needs at least 2 classes");
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_width));
  std::uniform_real_distribution<double> dist(-bound, bound);
  ClassifierParams p{{"classifier.weight", Tensor<T>({classes, input_width})}, {"classifier.bias", Tensor<T>({classes})}};
  for (auto& x : p.weight.value.data()) x = static_cast<T>(dist(rng));
  for (auto& x : p.bias.value.data()) x = static_cast<T>(dist(rng));
  return p;
}

namespace {

std::vector<bool> checked_rows(std::size_t rows, const std::vector<bool>* row_valid, const char* what) {
  std::vector<bool> valid = row_valid ? *row_valid : std::vector<bool>(rows, true);
  if (valid.size() != rows) fail(ErrorKind::ShapeError, std::string(what) + ": mask length mismatch");
  if (std::find(valid.begin(), valid.end(), true) == valid.end()) {
    fail(ErrorKind::DegenerateRow, std::string(what) + ": sequence has no valid residue");
  }
  return valid;
}

template <typename T>
void check_embedding(const Tensor<T>& e, const ProjectionParams<T>& proj, const char* what) {
  if (e.rank() != 2 || e.cols() != proj.dim()) {
    fail(ErrorKind::ShapeError, std::string(what) + ": embedding " + num::shape_string(e.shape()) +
                                    " vs projection width " + std::to_string(proj.dim()));
  }
}

}  // namespace

template <typename T>
Var<T> self_attention(Var<T> e_g, const ProjectionParams<T>& proj, const std::vector<bool>* row_valid,
                      bool trainable) {
  check_embedding(e_g.value(), proj, "self_attention");
  const auto valid = checked_rows(e_g.value().rows(), row_valid, "self_attention");
  auto& tape = *e_g.tape();
  Var<T> q = num::matmul(e_g, neg::leaf(tape, proj.query, trainable));
  Var<T> k = num::matmul(e_g, neg::leaf(tape, proj.key, trainable));
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(proj.key_dim()));
  const num::Mask mask = num::Mask::outer(valid, valid);
  return num::softmax_rows(num::scale(num::matmul_nt(q, k), inv_sqrt), &mask, num::EmptyRow::Zero);
}

template <typename T>
Var<T> self_attend_pool(Var<T> e_g, const ProjectionParams<T>& proj, const std::vector<bool>* row_valid,
                        bool trainable) {
  check_embedding(e_g.value(), proj, "self_attend_pool");
  const auto valid = checked_rows(e_g.value().rows(), row_valid, "self_attend_pool");
  Var<T> att = self_attention(e_g, proj, &valid, trainable);
  Var<T> v = num::matmul(e_g, neg::leaf(*e_g.tape(), proj.value, trainable));
  return num::mean_pool_rows(num::matmul(att, v), &valid);
}

template <typename T>
Var<T> classify(Var<T> h, const ClassifierParams<T>& params, bool trainable) {
  auto& tape = *h.tape();
  return num::linear(h, neg::leaf(tape, params.weight, trainable), neg::leaf(tape, params.bias, trainable));
}

template <typename T>
Classification<T> classify_and_loss(Var<T> h, const ClassifierParams<T>& params, std::size_t y, bool trainable) {
  Var<T> logits = classify(h, params, trainable);
  return {logits, num::cross_entropy(logits, y)};
}

template <typename T>
Var<T> pair_representation(Var<T> h_a, Var<T> h_b) {
  const auto& a = h_a.value();
  const auto& b = h_b.value();
  if (a.rank() != 1 || b.rank() != 1 || a.size() != b.size()) {
    fail(ErrorKind::ShapeError, "pair_representation: widths " + num::shape_string(a.shape()) + " and " +
                                    num::shape_string(b.shape()) + " differ");
  }
  return num::concat(h_a, h_b);
}

LossValues total_loss(double l_s, double l_n, double lambda) {
  if (!std::isfinite(l_s) || !std::isfinite(l_n) || !std::isfinite(lambda)) {
    fail(ErrorKind::NumericalError, "total_loss: non-finite input (L_S=" + std::to_string(l_s) +
                                        ", L_N=" + std::to_string(l_n) + ")");
  }
  return {l_s, l_n, l_s + lambda * l_n};
}

template <typename T>
LossBundle<T> total_loss(Var<T> l_s, Var<T> l_n, T lambda) {
  total_loss(double(l_s.value()[0]), double(l_n.value()[0]), double(lambda));
  return {l_s, l_n, num::add(l_s, num::scale(l_n, lambda))};
}

std::vector<double> response_scores(const AttentionMatrix& att) {
  const auto& v = att.values;
  const std::size_t l = v.rows(), m = v.cols();
  std::vector<double> scores(m, 0.0);
  std::size_t rows = 0;
  for (std::size_t r = 0; r < l; ++r) {
    if (!att.row_valid.empty() && !att.row_valid[r]) continue;
    ++rows;
    for (std::size_t c = 0; c < m; ++c) {
      if (att.col_valid.empty() || att.col_valid[c]) scores[c] += v(r, c);
    }
  }
  if (rows > 0) {
    for (double& s : scores) s /= static_cast<double>(rows);
  }
  return scores;
}

std::vector<std::pair<std::size_t, double>> top_k_residues(std::span<const double> scores, std::size_t k) {
  if (k == 0) fail(ErrorKind::ConfigError, "top_k_residues: k must be at least 1");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(std::min(k, order.size()));
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(order.size());
  for (std::size_t i : order) out.emplace_back(i, scores[i]);
  return out;
}

#define NMT_INSTANTIATE(T)                                                                                        \
  template struct ClassifierParams<T>;                                                                            \
  template Var<T> self_attend_pool<T>(Var<T>, const ProjectionParams<T>&, const std::vector<bool>*, bool);       \
  template Var<T> self_attention<T>(Var<T>, const ProjectionParams<T>&, const std::vector<bool>*, bool);         \
  template Var<T> classify<T>(Var<T>, const ClassifierParams<T>&, bool);                                         \
  template Classification<T> classify_and_loss<T>(Var<T>, const ClassifierParams<T>&, std::size_t, bool);       \
  template Var<T> pair_representation<T>(Var<T>, Var<T>);                                                        \
  template LossBundle<T> total_loss<T>(Var<T>, Var<T>, T);

NMT_INSTANTIATE(float)
NMT_INSTANTIATE(double)
#undef NMT_INSTANTIATE

}  // namespace nmt::head
