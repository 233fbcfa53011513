#include "nmt/encoder/encoder.hpp"

#include <cmath>
#include <random>
#include <string>

#include "nmt/error.hpp"
#include "nmt/numcore/ops.hpp"

namespace nmt::enc {

using num::Parameter;
using num::Tensor;
using num::Var;

void EncoderConfig::validate() const {
  if (d_model == 0 || layers == 0 || heads == 0 || ff == 0 || out_dim == 0 || max_len == 0) {
    fail(ErrorKind::ConfigError, "encoder widths, layer count and max_len must be positive");
  }
  if (d_model % heads != 0) {
    fail(ErrorKind::ConfigError,
         "d_model (" + std::to_string(d_model) + ") must be divisible by heads (" + std::to_string(heads) + ")");
  }
}

namespace {

template <typename T>
Parameter<T> uniform(std::string name, num::Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<T> t(std::move(shape));
  for (auto& x : t.data()) x = static_cast<T>(dist(rng));
  return {std::move(name), std::move(t)};
}

template <typename T>
Parameter<T> filled(std::string name, std::size_t n, T value) {
  return {std::move(name), Tensor<T>({n}, value)};
}

template <typename T, typename U>
Parameter<U> cast_param(const Parameter<T>& p) {
  return {p.name, p.value.template cast<U>()};
}

// x: [m x d_model]
template <typename T>
Var<T> self_attention(Var<T> x, EncoderLayer<T>& layer, const EncoderConfig& cfg, num::Tape<T>& tape, bool trainable) {
  Var<T> q = num::matmul(x, tape.leaf(layer.wq, trainable));
  Var<T> k = num::matmul(x, tape.leaf(layer.wk, trainable));
  Var<T> v = num::matmul(x, tape.leaf(layer.wv, trainable));
  const std::size_t dh = cfg.head_dim();
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));
  std::vector<Var<T>> heads;
  heads.reserve(cfg.heads);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    Var<T> qh = num::slice_cols(q, h * dh, dh);
    Var<T> kh = num::slice_cols(k, h * dh, dh);
    Var<T> vh = num::slice_cols(v, h * dh, dh);
    Var<T> att = num::softmax_rows(num::scale(num::matmul_nt(qh, kh), inv_sqrt));
    heads.push_back(num::matmul(att, vh));
  }
  Var<T> merged = cfg.heads == 1 ? heads.front() : num::concat_cols(heads);
  return num::matmul(merged, tape.leaf(layer.wo, trainable));
}

}  // namespace

template <typename T>
Tensor<T> sinusoidal_positions(std::size_t max_len, std::size_t d_model) {
  Tensor<T> pe({max_len, d_model});
  for (std::size_t p = 0; p < max_len; ++p) {
    for (std::size_t i = 0; i < d_model; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(d_model));
      pe(p, i) = static_cast<T>(std::sin(static_cast<double>(p) * freq));
      if (i + 1 < d_model) pe(p, i + 1) = static_cast<T>(std::cos(static_cast<double>(p) * freq));
    }
  }
  return pe;
}

template <typename T>
EncoderParams<T> init_encoder(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const std::size_t dm = config.d_model;
  EncoderParams<T> p;
  p.config = config;
  // Embedding lookup is a one-hot product: one active input per row.
  p.token_embedding = uniform<T>("encoder.token_embedding", {seq::kVocabSize, dm}, 1, rng);
  p.positions = sinusoidal_positions<T>(config.max_len, dm);
  p.layers.reserve(config.layers);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string pre = "encoder.layer" + std::to_string(l) + ".";
    EncoderLayer<T> layer{
        filled<T>(pre + "ln1_gamma", dm, T(1)),
        filled<T>(pre + "ln1_beta", dm, T(0)),
        uniform<T>(pre + "wq", {dm, dm}, dm, rng),
        uniform<T>(pre + "wk", {dm, dm}, dm, rng),
        uniform<T>(pre + "wv", {dm, dm}, dm, rng),
        uniform<T>(pre + "wo", {dm, dm}, dm, rng),
        filled<T>(pre + "ln2_gamma", dm, T(1)),
        filled<T>(pre + "ln2_beta", dm, T(0)),
        uniform<T>(pre + "ff1_w", {dm, config.ff}, dm, rng),
        uniform<T>(pre + "ff1_b", {config.ff}, dm, rng),
        uniform<T>(pre + "ff2_w", {config.ff, dm}, config.ff, rng),
        uniform<T>(pre + "ff2_b", {dm}, config.ff, rng),
    };
    p.layers.push_back(std::move(layer));
  }
  p.final_gamma = filled<T>("encoder.final_gamma", dm, T(1));
  p.final_beta = filled<T>("encoder.final_beta", dm, T(0));
  p.out_w = uniform<T>("encoder.out_w", {dm, config.out_dim}, dm, rng);
  p.out_b = uniform<T>("encoder.out_b", {config.out_dim}, dm, rng);
  return p;
}

template <typename T>
std::vector<Parameter<T>*> EncoderParams<T>::parameters() {
  std::vector<Parameter<T>*> out{&token_embedding};
  for (auto& l : layers) {
    for (auto* p : {&l.ln1_gamma, &l.ln1_beta, &l.wq, &l.wk, &l.wv, &l.wo, &l.ln2_gamma, &l.ln2_beta, &l.ff1_w,
                    &l.ff1_b, &l.ff2_w, &l.ff2_b}) {
      out.push_back(p);
    }
  }
  for (auto* p : {&final_gamma, &final_beta, &out_w, &out_b}) out.push_back(p);
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> EncoderParams<T>::parameters() const {
  auto mut = const_cast<EncoderParams<T>*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

template <typename T>
template <typename U>
EncoderParams<U> EncoderParams<T>::cast() const {
  EncoderParams<U> out;
  out.config = config;
  out.token_embedding = cast_param<T, U>(token_embedding);
  out.positions = positions.template cast<U>();
  for (const auto& l : layers) {
    out.layers.push_back({cast_param<T, U>(l.ln1_gamma), cast_param<T, U>(l.ln1_beta), cast_param<T, U>(l.wq),
                          cast_param<T, U>(l.wk), cast_param<T, U>(l.wv), cast_param<T, U>(l.wo),
                          cast_param<T, U>(l.ln2_gamma), cast_param<T, U>(l.ln2_beta), cast_param<T, U>(l.ff1_w),
                          cast_param<T, U>(l.ff1_b), cast_param<T, U>(l.ff2_w), cast_param<T, U>(l.ff2_b)});
  }
  out.final_gamma = cast_param<T, U>(final_gamma);
  out.final_beta = cast_param<T, U>(final_beta);
  out.out_w = cast_param<T, U>(out_w);
  out.out_b = cast_param<T, U>(out_b);
  return out;
}

template <typename T>
Var<T> encode(num::Tape<T>& tape, std::span<const std::uint8_t> tokens, EncoderParams<T>& params, bool trainable) {
  const EncoderConfig& cfg = params.config;
  const std::size_t m = tokens.size();
  if (m == 0) fail(ErrorKind::EmptySequence, "cannot encode an empty sequence");
  if (m > cfg.max_len) {
    fail(ErrorKind::ShapeError,
         "sequence length " + std::to_string(m) + " exceeds encoder max_len " + std::to_string(cfg.max_len));
  }
  std::vector<std::size_t> ids(tokens.begin(), tokens.end());
  for (std::size_t id : ids) {
    if (id >= seq::kVocabSize) fail(ErrorKind::ShapeError, "token code " + std::to_string(id) + " outside the alphabet");
  }

  Tensor<T> pos({m, cfg.d_model});
  std::copy_n(params.positions.data().begin(), m * cfg.d_model, pos.data().begin());

  Var<T> x = num::add(num::gather_rows(tape.leaf(params.token_embedding, trainable), std::span<const std::size_t>(ids)),
                      tape.constant(std::move(pos)));
  for (auto& layer : params.layers) {
    Var<T> h = num::layer_norm_rows(x, tape.leaf(layer.ln1_gamma, trainable), tape.leaf(layer.ln1_beta, trainable));
    x = num::add(x, self_attention(h, layer, cfg, tape, trainable));
    h = num::layer_norm_rows(x, tape.leaf(layer.ln2_gamma, trainable), tape.leaf(layer.ln2_beta, trainable));
    h = num::gelu(num::add_row(num::matmul(h, tape.leaf(layer.ff1_w, trainable)), tape.leaf(layer.ff1_b, trainable)));
    h = num::add_row(num::matmul(h, tape.leaf(layer.ff2_w, trainable)), tape.leaf(layer.ff2_b, trainable));
    x = num::add(x, h);
  }
  x = num::layer_norm_rows(x, tape.leaf(params.final_gamma, trainable), tape.leaf(params.final_beta, trainable));
  return num::add_row(num::matmul(x, tape.leaf(params.out_w, trainable)), tape.leaf(params.out_b, trainable));
}

template <typename T>
Tensor<T> encode_values(const seq::TokenSequence& seq, const EncoderParams<T>& params) {
  num::Tape<T> tape;
  // Frozen leaves copy values and never write through the pointer.
  return encode(tape, seq, const_cast<EncoderParams<T>&>(params), false).value();
}

#define NMT_INSTANTIATE(T)                                                                                       \
  template Tensor<T> sinusoidal_positions<T>(std::size_t, std::size_t);                                         \
  template EncoderParams<T> init_encoder<T>(const EncoderConfig&, std::uint64_t);                               \
  template struct EncoderParams<T>;                                                                              \
  template Var<T> encode<T>(num::Tape<T>&, std::span<const std::uint8_t>, EncoderParams<T>&, bool);             \
  template Tensor<T> encode_values<T>(const seq::TokenSequence&, const EncoderParams<T>&);

NMT_INSTANTIATE(float)
NMT_INSTANTIATE(double)
#undef NMT_INSTANTIATE

template EncoderParams<double> EncoderParams<float>::cast<double>() const;
template EncoderParams<float> EncoderParams<double>::cast<float>() const;
template EncoderParams<float> EncoderParams<float>::cast<float>() const;
template EncoderParams<double> EncoderParams<double>::cast<double>() const;

}  // namespace nmt::enc
