#pragma once

// Header-only so the inference path can use the projections without
// linking the negative-mining code.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "nmt/numcore/tape.hpp"

namespace nmt::neg {

/// The four d x d_k attention projections. `key` is the single key
/// projection shared by the cross-attention loss and the self-attention head.
template <typename T>
struct ProjectionParams {
  num::Parameter<T> key;        // W_g^K
  num::Parameter<T> neg_query;  // W_n^Q
  num::Parameter<T> query;      // W_g^Q
  num::Parameter<T> value;      // W_g^V

  std::size_t dim() const { return key.value.rows(); }
  std::size_t key_dim() const { return key.value.cols(); }

  std::vector<num::Parameter<T>*> parameters() { return {&key, &neg_query, &query, &value}; }
  std::vector<const num::Parameter<T>*> parameters() const { return {&key, &neg_query, &query, &value}; }

  template <typename U>
  ProjectionParams<U> cast() const {
    auto c = [](const num::Parameter<T>& p) { return num::Parameter<U>{p.name, p.value.template cast<U>()}; };
    return {c(key), c(neg_query), c(query), c(value)};
  }

  static ProjectionParams init(std::size_t d, std::size_t d_k, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto make = [&](const char* name) {
      num::Tensor<T> t({d, d_k});
      for (auto& x : t.data()) x = static_cast<T>(dist(rng));
      return num::Parameter<T>{name, std::move(t)};
    };
    ProjectionParams p;
    p.key = make("proj.key");
    p.neg_query = make("proj.neg_query");
    p.query = make("proj.query");
    p.value = make("proj.value");
    return p;
  }
};

/// Trainable or constant leaf. Constant leaves only read the parameter.
template <typename T>
num::Var<T> leaf(num::Tape<T>& tape, const num::Parameter<T>& p, bool trainable) {
  return trainable ? tape.param(const_cast<num::Parameter<T>&>(p)) : tape.frozen(p);
}

}  // namespace nmt::neg
