#include "nmt/trainer/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "nmt/error.hpp"
#include "nmt/negmine/negmine.hpp"

namespace nmt::train {

namespace {

double mean(const std::vector<double>& xs) {
  double s = 0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

std::vector<double> seed_accuracies(const TrainConfig& base, const Dataset& data, const TrainHooks& hooks) {
  std::vector<double> accs;
  for (std::size_t s = 0; s < base.sweep_seeds; ++s) {
    TrainConfig c = base;
    c.seed = base.seed + s;
    c.checkpoint.clear();
    const auto result = train_model(c, data, hooks);
    accs.push_back(evaluate_model(c, result.model, reporting_split(data), hooks));
  }
  return accs;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::vector<SweepRow> sweep_negative_counts(const TrainConfig& config, const Dataset& data,
                                            std::span<const std::size_t> negative_counts, const TrainHooks& hooks) {
  if (config.sweep_seeds == 0) fail(ErrorKind::ConfigError, "sweep_seeds must be positive");
  std::vector<SweepRow> rows;
  for (std::size_t n : negative_counts) {
    TrainConfig c = config;
    c.negatives = n;
    SweepRow row;
    row.negatives = n;
    row.accuracies = seed_accuracies(c, data, hooks);
    row.mean_accuracy = mean(row.accuracies);
    row.std_accuracy = sample_std(row.accuracies);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_sweep(const std::vector<SweepRow>& rows) {
  std::string out = "N\tmean_acc\tstd\n";
  for (const auto& r : rows) {
    out += std::to_string(r.negatives) + "\t" + fixed(r.mean_accuracy, 4) + "\t" + fixed(r.std_accuracy, 4) + "\n";
  }
  return out;
}

std::vector<AblationRow> scratch_vs_pretrained(const TrainConfig& config, const Dataset& data,
                                               const TrainHooks& hooks) {
  if (!hooks.pretrained && config.pretrained.empty()) {
    fail(ErrorKind::CheckpointNotFound, "the pretrained rows need a pretrained checkpoint (set 'pretrained')");
  }
  std::vector<AblationRow> rows;
  for (EncoderMode mode : {EncoderMode::Scratch, EncoderMode::Finetune}) {
    for (bool negmine : {false, true}) {
      TrainConfig c = config;
      c.encoder_mode = mode;
      if (!negmine) c.lambda = 0.0;
      AblationRow row;
      row.encoder = mode == EncoderMode::Scratch ? "scratch" : "pretrained";
      row.classifier = negmine ? "negmine" : "supervised";
      row.accuracy = mean(seed_accuracies(c, data, hooks));
      rows.push_back(row);
    }
  }
  for (auto& r : rows) r.delta = r.accuracy - rows.front().accuracy;
  return rows;
}

std::string format_ablation(const std::vector<AblationRow>& rows) {
  std::string out = "encoder\tclassifier\tmean_acc\tdelta\n";
  for (const auto& r : rows) {
    out += r.encoder + "\t" + r.classifier + "\t" + fixed(r.accuracy, 4) + "\t" + (r.delta >= 0 ? "+" : "") +
           fixed(r.delta, 4) + "\n";
  }
  return out;
}

head::Model<float> pretrain_encoder(const TrainConfig& config, const Dataset& pretext) {
  TrainConfig c = config;
  c.encoder_mode = EncoderMode::Scratch;
  c.lambda = 0.0;
  c.checkpoint.clear();
  return train_model(c, pretext).model;
}

head::AttentionMatrix cross_attention_matrix(const head::Model<float>& model, const seq::TokenSequence& a,
                                             const seq::TokenSequence& b, const enc::EmbeddingStore* store) {
  if (!model.config.has_encoder && !store) {
    fail(ErrorKind::ConfigError, "model has no encoder; an embedding store is required");
  }
  const auto source = model.config.has_encoder ? head::EmbeddingSource<float>::from_encoder(model.encoder, false)
                                               : head::EmbeddingSource<float>::from_store(*store);
  num::Tape<double> tape;
  const auto proj = model.proj.cast<double>();
  num::Tape<float> ftape;
  const auto e_a = source.embed(ftape, a, false).value().cast<double>();
  const auto e_b = source.embed(ftape, b, false).value().cast<double>();
  const auto att = neg::cross_attention(tape.constant(e_b), tape.constant(e_a), proj, nullptr, nullptr,
                                        model.config.scale_cross, false);
  return {att.att.value(), att.row_valid, att.col_valid};
}

std::string attention_csv(const head::AttentionMatrix& att) {
  const std::size_t rows = att.values.shape()[0], cols = att.values.shape()[1];
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << "residue";
  for (std::size_t j = 0; j < cols; ++j) os << ',' << j;
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < rows; ++i) {
    os << i;
    for (std::size_t j = 0; j < cols; ++j) {
      std::snprintf(buf, sizeof buf, "%.6g", att.values(i, j));
      os << ',' << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace nmt::train
