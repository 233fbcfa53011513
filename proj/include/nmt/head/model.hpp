#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nmt/encoder/embedding_store.hpp"
#include "nmt/encoder/encoder.hpp"
#include "nmt/head/head.hpp"
#include "nmt/seqdata/seqdata.hpp"

namespace nmt::head {

enum class TaskKind { Wise, Pair };

std::string_view to_string(TaskKind kind);
TaskKind parse_task(std::string_view text);  // "wise" | "pair", else ConfigError

struct ModelConfig {
  TaskKind task = TaskKind::Wise;
  std::size_t class_count = 2;
  /// False when embeddings come from a precomputed store.
  bool has_encoder = true;
  enc::EncoderConfig encoder;
  /// Hidden dimension d, also used as d_k for every projection.
  std::size_t hidden = 128;
  /// Divide cross-attention logits by sqrt(d_k).
  bool scale_cross = false;

  std::size_t classifier_input() const { return task == TaskKind::Pair ? 2 * hidden : hidden; }
  /// ConfigError on inconsistent widths (e.g. hidden != encoder.out_dim).
  void validate() const;
};

/// Every trainable tensor of the framework.
template <typename T>
struct Model {
  ModelConfig config;
  enc::EncoderParams<T> encoder;  // empty when !config.has_encoder
  ProjectionParams<T> proj;
  ClassifierParams<T> classifier;

  /// Head parameters, preceded by the encoder's when requested and present.
  std::vector<num::Parameter<T>*> parameters(bool include_encoder = true);
  std::vector<const num::Parameter<T>*> parameters(bool include_encoder = true) const;

  template <typename U>
  Model<U> cast() const;
};

template <typename T>
Model<T> init_model(const ModelConfig& config, std::uint64_t seed);

/// Where per-residue embeddings come from: the encoder (recorded with or
/// without gradients) or an embedding store. A frozen encoder's outputs are
/// cached, since they cannot change.
template <typename T>
class EmbeddingSource {
 public:
  static EmbeddingSource from_encoder(const enc::EncoderParams<T>& params, bool trainable);
  static EmbeddingSource from_store(const enc::EmbeddingStore& store);

  bool trainable() const noexcept { return trainable_; }
  bool uses_store() const noexcept { return store_ != nullptr; }

  /// record_grad is honoured only for a trainable encoder.
  num::Var<T> embed(num::Tape<T>& tape, const seq::TokenSequence& seq, bool record_grad = true) const;

 private:
  EmbeddingSource() = default;

  struct Cache {
    std::mutex mutex;
    std::unordered_map<std::string, num::Tensor<T>> values;
  };

  const enc::EncoderParams<T>* encoder_ = nullptr;
  const enc::EmbeddingStore* store_ = nullptr;
  bool trainable_ = false;
  std::shared_ptr<Cache> cache_;
};

template <typename T>
num::Var<T> wise_logits(const Model<T>& model, num::Var<T> e, bool trainable = true);

/// A first: the pooled representations are concatenated in order.
template <typename T>
num::Var<T> pair_logits(const Model<T>& model, num::Var<T> e_a, num::Var<T> e_b, bool trainable = true);

struct Prediction {
  std::size_t label = 0;
  std::vector<double> probabilities;
};

/// Inference path: embeddings, self-attention pooling, classifier. No
/// negative sampling, no cross-attention, no gradient recording.
template <typename T>
Prediction predict(const Model<T>& model, const EmbeddingSource<T>& source, const seq::TokenSequence& input);

template <typename T>
Prediction predict(const Model<T>& model, const EmbeddingSource<T>& source, const seq::PairExample& input);

/// Softmax of the logits in double precision, with argmax (lowest index on ties).
Prediction prediction_from_logits(std::span<const double> logits);

}  // namespace nmt::head
