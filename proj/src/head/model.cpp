#include "nmt/head/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nmt/error.hpp"
#include "nmt/numcore/ops.hpp"

namespace nmt::head {

using num::Parameter;
using num::Tensor;
using num::Var;

std::string_view to_string(TaskKind kind) { return kind == TaskKind::Wise ? "wise" : "pair"; }

TaskKind parse_task(std::string_view text) {
  if (text == "wise") return TaskKind::Wise;
  if (text == "pair") return TaskKind::Pair;
  fail(ErrorKind::ConfigError, "task must be 'wise' or 'pair', got '" + std::string(text) + "'");
}

void ModelConfig::validate() const {
  if (class_count < 2) fail(ErrorKind::ConfigError, "class_count must be at least 2");
  if (task == TaskKind::Pair && class_count != 2) fail(ErrorKind::ConfigError, "the pair task is binary");
  if (hidden == 0) fail(ErrorKind::ConfigError, "hidden dimension must be positive");
  if (has_encoder) {
    encoder.validate();
    if (encoder.out_dim != hidden) {
      fail(ErrorKind::ConfigError, "encoder output width " + std::to_string(encoder.out_dim) +
                                       " must equal the hidden dimension " + std::to_string(hidden));
    }
  }
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::parameters(bool include_encoder) {
  std::vector<Parameter<T>*> out;
  if (include_encoder && config.has_encoder) out = encoder.parameters();
  for (auto* p : proj.parameters()) out.push_back(p);
  for (auto* p : classifier.parameters()) out.push_back(p);
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> Model<T>::parameters(bool include_encoder) const {
  auto mut = const_cast<Model<T>*>(this)->parameters(include_encoder);
  return {mut.begin(), mut.end()};
}

template <typename T>
template <typename U>
Model<U> Model<T>::cast() const {
  Model<U> out;
  out.config = config;
  if (config.has_encoder) out.encoder = encoder.template cast<U>();
  out.proj = proj.template cast<U>();
  out.classifier = classifier.template cast<U>();
  return out;
}

template <typename T>
Model<T> init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model<T> m;
  m.config = config;
  std::mt19937_64 rng(seed);
  if (config.has_encoder) m.encoder = enc::init_encoder<T>(config.encoder, rng());
  m.proj = ProjectionParams<T>::init(config.hidden, config.hidden, rng);
  m.classifier = ClassifierParams<T>::init(config.class_count, config.classifier_input(), rng);
  return m;
}

template <typename T>
EmbeddingSource<T> EmbeddingSource<T>::from_encoder(const enc::EncoderParams<T>& params, bool trainable) {
  EmbeddingSource s;
  s.encoder_ = &params;
  s.trainable_ = trainable;
  if (!trainable) s.cache_ = std::make_shared<Cache>();
  return s;
}

template <typename T>
EmbeddingSource<T> EmbeddingSource<T>::from_store(const enc::EmbeddingStore& store) {
  EmbeddingSource s;
  s.store_ = &store;
  return s;
}

template <typename T>
Var<T> EmbeddingSource<T>::embed(num::Tape<T>& tape, const seq::TokenSequence& seq, bool record_grad) const {
  if (store_) {
    const auto& record = store_->at(seq.id);
    if (record.length() != seq.length()) {
      fail(ErrorKind::ShapeError, "embedding for '" + seq.id + "' has " + std::to_string(record.length()) +
                                      " rows, sequence has " + std::to_string(seq.length()) + " residues");
    }
    return tape.constant(record.values.template cast<T>());
  }
  if (trainable_) return enc::encode(tape, seq, const_cast<enc::EncoderParams<T>&>(*encoder_), record_grad);

  const std::string key(seq.tokens.begin(), seq.tokens.end());
  {
    std::lock_guard lock(cache_->mutex);
    if (auto it = cache_->values.find(key); it != cache_->values.end()) return tape.constant(it->second);
  }
  Tensor<T> values = enc::encode_values(seq, *encoder_);
  {
    std::lock_guard lock(cache_->mutex);
    cache_->values.try_emplace(key, values);
  }
  return tape.constant(std::move(values));
}

template <typename T>
Var<T> wise_logits(const Model<T>& model, Var<T> e, bool trainable) {
  return classify(self_attend_pool(e, model.proj, nullptr, trainable), model.classifier, trainable);
}

template <typename T>
Var<T> pair_logits(const Model<T>& model, Var<T> e_a, Var<T> e_b, bool trainable) {
  Var<T> h = pair_representation(self_attend_pool(e_a, model.proj, nullptr, trainable),
                                 self_attend_pool(e_b, model.proj, nullptr, trainable));
  return classify(h, model.classifier, trainable);
}

Prediction prediction_from_logits(std::span<const double> logits) {
  Prediction p;
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0;
  p.probabilities.reserve(logits.size());
  for (double x : logits) {
    p.probabilities.push_back(std::exp(x - top));
    z += p.probabilities.back();
  }
  for (double& x : p.probabilities) x /= z;
  p.label = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  return p;
}

template <typename T>
static Prediction finish(Var<T> logits) {
  std::vector<double> l(logits.value().data().begin(), logits.value().data().end());
  return prediction_from_logits(l);
}

template <typename T>
Prediction predict(const Model<T>& model, const EmbeddingSource<T>& source, const seq::TokenSequence& input) {
  num::Tape<T> tape;
  return finish(wise_logits(model, source.embed(tape, input, false), false));
}

template <typename T>
Prediction predict(const Model<T>& model, const EmbeddingSource<T>& source, const seq::PairExample& input) {
  num::Tape<T> tape;
  Var<T> e_a = source.embed(tape, input.seq_a, false);
  Var<T> e_b = source.embed(tape, input.seq_b, false);
  return finish(pair_logits(model, e_a, e_b, false));
}

#define NMT_INSTANTIATE(T)                                                                                 \
  template struct Model<T>;                                                                                \
  template Model<T> init_model<T>(const ModelConfig&, std::uint64_t);                                     \
  template class EmbeddingSource<T>;                                                                       \
  template Var<T> wise_logits<T>(const Model<T>&, Var<T>, bool);                                           \
  template Var<T> pair_logits<T>(const Model<T>&, Var<T>, Var<T>, bool);                                  \
  template Prediction predict<T>(const Model<T>&, const EmbeddingSource<T>&, const seq::TokenSequence&);  \
  template Prediction predict<T>(const Model<T>&, const EmbeddingSource<T>&, const seq::PairExample&);

NMT_INSTANTIATE(float)
NMT_INSTANTIATE(double)
#undef NMT_INSTANTIATE

template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;
template Model<float> Model<float>::cast<float>() const;
template Model<double> Model<double>::cast<double>() const;

}  // namespace nmt::head
