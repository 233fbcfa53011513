#pragma once

#include <span>
#include <string>
#include <vector>

#include "nmt/head/head.hpp"
#include "nmt/trainer/trainer.hpp"

namespace nmt::train {

struct SweepRow {
  std::size_t negatives = 0;
  double mean_accuracy = 0;
  double std_accuracy = 0;  // sample standard deviation over seeds
  std::vector<double> accuracies;
};

/// Trains one model per (N, seed) with seeds config.seed + s for
/// s < config.sweep_seeds and reports accuracy on the reporting split.
std::vector<SweepRow> sweep_negative_counts(const TrainConfig& config, const Dataset& data,
                                            std::span<const std::size_t> negative_counts,
                                            const TrainHooks& hooks = {});

/// "N<TAB>mean_acc<TAB>std" table.
std::string format_sweep(const std::vector<SweepRow>& rows);

struct AblationRow {
  std::string encoder;     // "scratch" or "pretrained"
  std::string classifier;  // "supervised" (lambda = 0) or "negmine"
  double accuracy = 0;     // mean over seeds
  double delta = 0;        // against the scratch/supervised row
};

/// Scratch vs pretrained encoder, each with and without L_N. The
/// pretrained rows fine-tune the encoder in hooks.pretrained or
/// config.pretrained; CheckpointNotFound when neither is available.
std::vector<AblationRow> scratch_vs_pretrained(const TrainConfig& config, const Dataset& data,
                                               const TrainHooks& hooks = {});

std::string format_ablation(const std::vector<AblationRow>& rows);

/// Supervised-only training of a full model whose encoder serves as the
/// pretrained starting point for fine-tuning.
head::Model<float> pretrain_encoder(const TrainConfig& config, const Dataset& pretext);

/// Cross-attention of B's residues (rows) over A's residues (columns)
/// under the model's own negative-mining projections.
head::AttentionMatrix cross_attention_matrix(const head::Model<float>& model, const seq::TokenSequence& a,
                                             const seq::TokenSequence& b, const enc::EmbeddingStore* store = nullptr);

/// Header row of residue indices, then one row per query residue, 6
/// significant digits.
std::string attention_csv(const head::AttentionMatrix& att);

}  // namespace nmt::train
