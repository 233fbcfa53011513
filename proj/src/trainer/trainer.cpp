#include "nmt/trainer/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "nmt/error.hpp"
#include "nmt/numcore/adam.hpp"
#include "nmt/numcore/ops.hpp"
#include "nmt/trainer/checkpoint.hpp"

namespace nmt::train {

using num::Tensor;
using num::Var;

std::string MetricsLog::to_tsv() const {
  std::ostringstream os;
  os.precision(9);
  os << "epoch\tL_S\tL_N\tL_total\tval_acc\n";
  for (const auto& e : epochs) {
    os << e.epoch << '\t' << e.supervised << '\t' << e.negative << '\t' << e.total << '\t' << e.val_accuracy << '\n';
  }
  return os.str();
}

bool MetricsLog::same_values(const MetricsLog& other) const {
  if (epochs.size() != other.epochs.size()) return false;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const auto &a = epochs[i], &b = other.epochs[i];
    if (a.epoch != b.epoch || a.supervised != b.supervised || a.negative != b.negative || a.total != b.total ||
        a.val_accuracy != b.val_accuracy) {
      return false;
    }
  }
  return true;
}

BatchPlan plan_batch(const TrainConfig& config, const Split& split, std::span<const std::size_t> positions,
                     const neg::LabelIndex& index, const neg::NegativeSampler& sampler, std::mt19937_64& rng) {
  BatchPlan plan;
  plan.examples.assign(positions.begin(), positions.end());
  if (config.task == head::TaskKind::Wise) {
    plan.negatives.resize(positions.size());
    if (!config.uses_negatives()) return plan;
    for (std::size_t i = 0; i < positions.size(); ++i) {
      plan.negatives[i] = sampler.wise(index, split.wise[positions[i]], config.negatives, rng).negatives;
    }
    return plan;
  }
  plan.negative_pair.assign(positions.size(), false);
  if (!config.uses_negatives()) return plan;
  std::vector<seq::PairExample> batch;
  batch.reserve(positions.size());
  for (std::size_t p : positions) batch.push_back(split.pairs[p]);
  // Up to N of the batch's non-interacting pairs, in batch order.
  const auto chosen = sampler.pair(batch);
  for (std::size_t k = 0; k < chosen.size() && k < config.negatives; ++k) plan.negative_pair.at(chosen[k]) = true;
  return plan;
}

template <typename T>
head::LossBundle<T> batch_loss(num::Tape<T>& tape, const head::Model<T>& model,
                               const head::EmbeddingSource<T>& source, const Dataset& data, const Split& split,
                               const BatchPlan& plan, const TrainConfig& config) {
  if (plan.examples.empty()) fail(ErrorKind::ShapeError, "batch_loss: empty batch");
  const bool trainable = true;
  std::unordered_map<std::string, Var<T>> memo;
  auto embed = [&](const seq::TokenSequence& s) {
    auto it = memo.find(s.id);
    if (it != memo.end()) return it->second;
    Var<T> e = source.embed(tape, s, true);
    memo.emplace(s.id, e);
    return e;
  };

  std::vector<Var<T>> supervised, negative;
  for (std::size_t i = 0; i < plan.examples.size(); ++i) {
    std::vector<neg::CrossAttention<T>> atts;
    if (config.task == head::TaskKind::Wise) {
      const auto& ex = split.wise[plan.examples[i]];
      Var<T> e_g = embed(ex.seq);
      supervised.push_back(num::cross_entropy(head::wise_logits(model, e_g, trainable), ex.label));
      if (i < plan.negatives.size()) {
        for (const auto& id : plan.negatives[i]) {
          atts.push_back(neg::cross_attention(embed(data.sequence(id)), e_g, model.proj, nullptr, nullptr,
                                              model.config.scale_cross, trainable));
        }
      }
    } else {
      const auto& ex = split.pairs[plan.examples[i]];
      Var<T> e_a = embed(ex.seq_a);
      Var<T> e_b = embed(ex.seq_b);
      supervised.push_back(num::cross_entropy(head::pair_logits(model, e_a, e_b, trainable), ex.label));
      if (i < plan.negative_pair.size() && plan.negative_pair[i]) {
        // B's residues query A's residues.
        atts.push_back(
            neg::cross_attention(e_b, e_a, model.proj, nullptr, nullptr, model.config.scale_cross, trainable));
      }
    }
    if (!atts.empty()) negative.push_back(neg::negative_loss<T>(tape, atts));
  }

  const T inv_b = T(1) / static_cast<T>(plan.examples.size());
  Var<T> l_s = num::scale(num::add_all(supervised), inv_b);
  Var<T> l_n = negative.empty() ? tape.constant(Tensor<T>({1})) : num::scale(num::add_all(negative), inv_b);
  return head::total_loss(l_s, l_n, static_cast<T>(config.lambda));
}

template <typename T>
head::Model<T> initial_model(const TrainConfig& config, const TrainHooks& hooks, const enc::EmbeddingStore* store) {
  config.validate();
  if (config.encoder_mode == EncoderMode::Store && !store) {
    fail(ErrorKind::ConfigError, "store mode needs an embedding store");
  }
  const head::ModelConfig mc = config.model_config(store ? store->dim() : 0);
  head::Model<T> model = head::init_model<T>(mc, config.seed);

  const bool wants_pretrained = config.encoder_mode == EncoderMode::Finetune ||
                                (config.encoder_mode == EncoderMode::Frozen && (hooks.pretrained || !config.pretrained.empty()));
  if (wants_pretrained) {
    head::Model<float> loaded;
    const head::Model<float>* source = hooks.pretrained;
    if (!source) {
      if (config.pretrained.empty()) {
        fail(ErrorKind::CheckpointNotFound, "encoder_mode " + std::string(to_string(config.encoder_mode)) +
                                                " needs a pretrained checkpoint (set 'pretrained')");
      }
      loaded = load_checkpoint(config.pretrained);
      source = &loaded;
    }
    const auto& want = mc.encoder;
    const auto& have = source->config.encoder;
    if (!source->config.has_encoder || have.d_model != want.d_model || have.layers != want.layers ||
        have.heads != want.heads || have.ff != want.ff || have.out_dim != want.out_dim ||
        have.max_len != want.max_len) {
      fail(ErrorKind::ConfigError, "pretrained encoder dimensions do not match the configuration");
    }
    model.encoder = source->encoder.template cast<T>();
  }
  return model;
}

template <typename T>
head::EmbeddingSource<T> embedding_source(const TrainConfig& config, const head::Model<T>& model,
                                          const enc::EmbeddingStore* store) {
  if (config.encoder_mode == EncoderMode::Store) {
    if (!store) fail(ErrorKind::ConfigError, "store mode needs an embedding store");
    return head::EmbeddingSource<T>::from_store(*store);
  }
  return head::EmbeddingSource<T>::from_encoder(model.encoder, config.encoder_trainable());
}

namespace {

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

struct StoreHolder {
  enc::EmbeddingStore owned;
  const enc::EmbeddingStore* ptr = nullptr;

  StoreHolder(const TrainConfig& config, const TrainHooks& hooks) {
    if (config.encoder_mode != EncoderMode::Store) return;
    if (hooks.store) {
      ptr = hooks.store;
    } else {
      if (config.store.empty()) fail(ErrorKind::ConfigError, "store mode needs 'store' set to an NMEB file");
      owned = enc::load_embedding_store(config.store);
      ptr = &owned;
    }
  }
};

void check_split(const Dataset& data, const TrainConfig& config) {
  if (data.task != config.task) fail(ErrorKind::ConfigError, "dataset task does not match the configuration");
  if (data.class_count != config.class_count) {
    fail(ErrorKind::ConfigError, "dataset has " + std::to_string(data.class_count) + " classes, configuration " +
                                     std::to_string(config.class_count));
  }
  if (data.train.empty()) fail(ErrorKind::ShapeError, "training split is empty");
}

}  // namespace

template <typename T>
TrainResult<T> train(const TrainConfig& config, const Dataset& data, const TrainHooks& hooks) {
  check_split(data, config);
  StoreHolder store(config, hooks);
  TrainResult<T> result;
  result.model = initial_model<T>(config, hooks, store.ptr);
  head::Model<T>& model = result.last;
  model = result.model;
  const auto source = embedding_source<T>(config, model, store.ptr);

  const neg::NegativeSampler default_sampler;
  const neg::NegativeSampler& sampler = hooks.sampler ? *hooks.sampler : default_sampler;
  const neg::LabelIndex index = config.task == head::TaskKind::Wise ? neg::LabelIndex(data.train.wise)
                                                                    : neg::LabelIndex();

  auto params = model.parameters(config.encoder_trainable());
  num::AdamState<T> adam(num::AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});
  std::mt19937_64 shuffle_rng = derived_rng(config.seed, 1);
  std::mt19937_64 sample_rng = derived_rng(config.seed, 2);

  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  bool have_best = false;
  std::size_t batch_index = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double sum_s = 0, sum_n = 0, sum_t = 0;
    std::size_t seen = 0;
    bool stopped = false;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t end = std::min(order.size(), b + config.batch_size);
      const std::span<const std::size_t> positions(order.data() + b, end - b);
      const BatchPlan plan = plan_batch(config, data.train, positions, index, sampler, sample_rng);

      const std::string where = "batch " + std::to_string(batch_index) + " (epoch " + std::to_string(epoch) + ")";
      num::Tape<T> tape;
      std::optional<head::LossBundle<T>> bundle;
      try {
        bundle = batch_loss(tape, model, source, data, data.train, plan, config);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NumericalError) throw;
        fail(ErrorKind::NumericalError, "non-finite loss at " + where + ": " + e.what());
      }
      const auto& loss = *bundle;
      const auto values = loss.values();
      if (!std::isfinite(values.total)) fail(ErrorKind::NumericalError, "non-finite loss at " + where);
      num::adam_step<T>(params, tape.backward(loss.total), adam);
      ++batch_index;
      ++result.steps;

      const double n = static_cast<double>(positions.size());
      sum_s += values.supervised * n;
      sum_n += values.negative * n;
      sum_t += values.total * n;
      seen += positions.size();
      if (hooks.max_steps && result.steps >= hooks.max_steps) {
        stopped = true;
        break;
      }
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.supervised = sum_s / static_cast<double>(seen);
    m.negative = sum_n / static_cast<double>(seen);
    m.total = sum_t / static_cast<double>(seen);
    m.val_accuracy = data.valid.empty() ? 0.0 : evaluate(model, source, data.valid, config.threads);
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.epochs.push_back(m);
    if (hooks.on_epoch) hooks.on_epoch(m);

    // Without a validation split the latest model is kept.
    if (!have_best || data.valid.empty() || m.val_accuracy > result.best_val_accuracy) {
      result.model = model;
      result.best_epoch = epoch;
      result.best_val_accuracy = m.val_accuracy;
      have_best = true;
    }
    if (stopped) break;
  }
  if (!config.checkpoint.empty()) save_checkpoint(config.checkpoint, result.model.template cast<float>());
  return result;
}

TrainResult<float> train_model(const TrainConfig& config, const Dataset& data, const TrainHooks& hooks) {
  if (!config.verification) return train<float>(config, data, hooks);
  auto r = train<double>(config, data, hooks);
  TrainResult<float> out;
  out.model = r.model.cast<float>();
  out.last = r.last.cast<float>();
  out.log = std::move(r.log);
  out.best_epoch = r.best_epoch;
  out.best_val_accuracy = r.best_val_accuracy;
  out.steps = r.steps;
  return out;
}

template <typename T>
std::vector<head::Prediction> predict_split(const head::Model<T>& model, const head::EmbeddingSource<T>& source,
                                            const Split& split, std::size_t threads) {
  std::vector<head::Prediction> out(split.size());
  auto run = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      out[i] = split.wise.empty() ? head::predict(model, source, split.pairs[i]) : head::predict(model, source, split.wise[i].seq);
    }
  };
  std::size_t workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(1, split.size() / 8));
  if (workers <= 1) {
    run(0, split.size());
    return out;
  }
  // Each prediction is independent, so the result does not depend on the split into chunks.
  std::vector<std::future<void>> jobs;
  const std::size_t chunk = (split.size() + workers - 1) / workers;
  for (std::size_t lo = 0; lo < split.size(); lo += chunk) {
    jobs.push_back(std::async(std::launch::async, run, lo, std::min(split.size(), lo + chunk)));
  }
  for (auto& j : jobs) j.get();
  return out;
}

double accuracy(const std::vector<head::Prediction>& predictions, const Split& split) {
  if (split.empty()) fail(ErrorKind::ShapeError, "accuracy of an empty split");
  if (predictions.size() != split.size()) fail(ErrorKind::ShapeError, "prediction count does not match the split");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) correct += predictions[i].label == split.label(i);
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

template <typename T>
double evaluate(const head::Model<T>& model, const head::EmbeddingSource<T>& source, const Split& split,
                std::size_t threads) {
  if (split.empty()) fail(ErrorKind::ShapeError, "cannot evaluate on an empty split");
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split.label(i) >= model.config.class_count) {
      fail(ErrorKind::ConfigError, "dataset label " + std::to_string(split.label(i)) + " exceeds the model's " +
                                       std::to_string(model.config.class_count) + " classes");
    }
  }
  if (!split.pairs.empty() && model.config.task != head::TaskKind::Pair) {
    fail(ErrorKind::ConfigError, "pair data given to a protein-wise model");
  }
  if (!split.wise.empty() && model.config.task != head::TaskKind::Wise) {
    fail(ErrorKind::ConfigError, "protein-wise data given to a pair model");
  }
  return accuracy(predict_split(model, source, split, threads), split);
}

double evaluate_model(const TrainConfig& config, const head::Model<float>& model, const Split& split,
                      const TrainHooks& hooks) {
  TrainConfig c = config;
  if (!model.config.has_encoder) c.encoder_mode = EncoderMode::Store;
  StoreHolder store(c, hooks);
  const auto source = c.encoder_mode == EncoderMode::Store ? head::EmbeddingSource<float>::from_store(*store.ptr)
                                                          : head::EmbeddingSource<float>::from_encoder(model.encoder, false);
  return evaluate(model, source, split, config.threads);
}

const Split& reporting_split(const Dataset& data) {
  if (!data.test.empty()) return data.test;
  if (!data.valid.empty()) return data.valid;
  return data.train;
}

#define NMT_INSTANTIATE(T)                                                                                        \
  template head::LossBundle<T> batch_loss<T>(num::Tape<T>&, const head::Model<T>&, const head::EmbeddingSource<T>&, \
                                             const Dataset&, const Split&, const BatchPlan&, const TrainConfig&);  \
  template head::Model<T> initial_model<T>(const TrainConfig&, const TrainHooks&, const enc::EmbeddingStore*);     \
  template head::EmbeddingSource<T> embedding_source<T>(const TrainConfig&, const head::Model<T>&,                 \
                                                        const enc::EmbeddingStore*);                              \
  template TrainResult<T> train<T>(const TrainConfig&, const Dataset&, const TrainHooks&);                         \
  template std::vector<head::Prediction> predict_split<T>(const head::Model<T>&, const head::EmbeddingSource<T>&,  \
                                                          const Split&, std::size_t);                              \
  template double evaluate<T>(const head::Model<T>&, const head::EmbeddingSource<T>&, const Split&, std::size_t);

NMT_INSTANTIATE(float)
NMT_INSTANTIATE(double)
#undef NMT_INSTANTIATE

}  // namespace nmt::train
