#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nmt/encoder/embedding_store.hpp"
#include "nmt/head/model.hpp"
#include "nmt/negmine/negmine.hpp"
#include "nmt/trainer/config.hpp"
#include "nmt/trainer/dataset.hpp"

namespace nmt::train {

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double supervised = 0;  // mean L_S over training examples
  double negative = 0;    // mean L_N over training examples
  double total = 0;       // mean L_S + lambda * L_N
  double val_accuracy = 0;
  double seconds = 0;     // wall-clock
};

struct MetricsLog {
  std::vector<EpochMetrics> epochs;

  /// "epoch<TAB>L_S<TAB>L_N<TAB>L_total<TAB>val_acc" rows under a header.
  std::string to_tsv() const;
  /// Equality of every field except wall-clock time.
  bool same_values(const MetricsLog& other) const;
};

/// Test and tooling seams. Null members fall back to the configuration.
struct TrainHooks {
  const neg::NegativeSampler* sampler = nullptr;
  const enc::EmbeddingStore* store = nullptr;
  const head::Model<float>* pretrained = nullptr;
  std::function<void(const EpochMetrics&)> on_epoch;
  /// Stop after this many optimizer steps; 0 = run every epoch.
  std::size_t max_steps = 0;
};

template <typename T>
struct TrainResult {
  head::Model<T> model;  // best validation accuracy
  head::Model<T> last;   // after the final step
  MetricsLog log;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0;
  std::size_t steps = 0;
};

/// Which examples form a batch and which negatives each one uses.
struct BatchPlan {
  std::vector<std::size_t> examples;                // positions in the split
  std::vector<std::vector<std::string>> negatives;  // protein-wise: sampled ids per example
  std::vector<bool> negative_pair;                  // pair task: example contributes L_N
};

/// Draws negatives for `positions`. Does not touch the sampler or `rng`
/// when the configuration disables L_N.
BatchPlan plan_batch(const TrainConfig& config, const Split& split, std::span<const std::size_t> positions,
                     const neg::LabelIndex& index, const neg::NegativeSampler& sampler, std::mt19937_64& rng);

/// Batch-mean L_S, batch-mean L_N and L_total = L_S + lambda * L_N. Each
/// sequence is embedded once per batch.
template <typename T>
head::LossBundle<T> batch_loss(num::Tape<T>& tape, const head::Model<T>& model,
                               const head::EmbeddingSource<T>& source, const Dataset& data, const Split& split,
                               const BatchPlan& plan, const TrainConfig& config);

/// The untrained model and embedding source a configuration describes
/// (pretrained encoder loaded for finetune/frozen modes).
template <typename T>
head::Model<T> initial_model(const TrainConfig& config, const TrainHooks& hooks = {},
                             const enc::EmbeddingStore* store = nullptr);

template <typename T>
head::EmbeddingSource<T> embedding_source(const TrainConfig& config, const head::Model<T>& model,
                                          const enc::EmbeddingStore* store);

template <typename T>
TrainResult<T> train(const TrainConfig& config, const Dataset& data, const TrainHooks& hooks = {});

/// Runs in 64-bit when config.verification is set; the result is 32-bit.
TrainResult<float> train_model(const TrainConfig& config, const Dataset& data, const TrainHooks& hooks = {});

template <typename T>
std::vector<head::Prediction> predict_split(const head::Model<T>& model, const head::EmbeddingSource<T>& source,
                                            const Split& split, std::size_t threads = 0);

/// Fraction of correct argmax predictions; ConfigError on a class-count
/// mismatch, ShapeError on an empty split.
template <typename T>
double evaluate(const head::Model<T>& model, const head::EmbeddingSource<T>& source, const Split& split,
                std::size_t threads = 0);

double accuracy(const std::vector<head::Prediction>& predictions, const Split& split);

/// Convenience: evaluate with the configuration's embedding source.
double evaluate_model(const TrainConfig& config, const head::Model<float>& model, const Split& split,
                      const TrainHooks& hooks = {});

/// Test split when present, else validation, else training.
const Split& reporting_split(const Dataset& data);

}  // namespace nmt::train
