#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nmt/numcore/tape.hpp"
#include "nmt/numcore/tensor.hpp"
#include "nmt/seqdata/seqdata.hpp"

namespace nmt::enc {

struct EncoderConfig {
  std::size_t d_model = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ff = 256;
  std::size_t out_dim = 128;
  std::size_t max_len = seq::kDefaultMaxLen;

  /// ConfigError unless every width is positive and heads divides d_model.
  void validate() const;
  std::size_t head_dim() const { return d_model / heads; }
};

template <typename T>
struct EncoderLayer {
  num::Parameter<T> ln1_gamma, ln1_beta;
  num::Parameter<T> wq, wk, wv, wo;  // d_model x d_model
  num::Parameter<T> ln2_gamma, ln2_beta;
  num::Parameter<T> ff1_w, ff1_b;  // d_model x ff, ff
  num::Parameter<T> ff2_w, ff2_b;  // ff x d_model, d_model
};

/// Pre-LN transformer encoder standing in for a protein language model.
template <typename T>
struct EncoderParams {
  EncoderConfig config;
  num::Parameter<T> token_embedding;  // kVocabSize x d_model
  num::Tensor<T> positions;           // max_len x d_model, fixed sinusoidal
  std::vector<EncoderLayer<T>> layers;
  num::Parameter<T> final_gamma, final_beta;
  num::Parameter<T> out_w, out_b;  // d_model x out_dim, out_dim

  /// Every trainable tensor, in a fixed order. Pointers stay valid while
  /// the params object is not moved.
  std::vector<num::Parameter<T>*> parameters();
  std::vector<const num::Parameter<T>*> parameters() const;

  template <typename U>
  EncoderParams<U> cast() const;
};

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases,
/// ones/zeros for layer norms. Identical seeds give identical parameters.
template <typename T>
EncoderParams<T> init_encoder(const EncoderConfig& config, std::uint64_t seed);

/// pe[p, 2i] = sin(p / 10000^(2i/d)), pe[p, 2i+1] = cos(same).
template <typename T>
num::Tensor<T> sinusoidal_positions(std::size_t max_len, std::size_t d_model);

/// One out_dim row per residue. With trainable=false the parameters enter
/// the tape as constants and receive no gradient.
template <typename T>
num::Var<T> encode(num::Tape<T>& tape, std::span<const std::uint8_t> tokens, EncoderParams<T>& params, bool trainable);

template <typename T>
num::Var<T> encode(num::Tape<T>& tape, const seq::TokenSequence& seq, EncoderParams<T>& params, bool trainable) {
  return encode(tape, std::span<const std::uint8_t>(seq.tokens), params, trainable);
}

/// Forward pass only, on a private tape.
template <typename T>
num::Tensor<T> encode_values(const seq::TokenSequence& seq, const EncoderParams<T>& params);

}  // namespace nmt::enc
