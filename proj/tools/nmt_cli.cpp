#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nmt/encoder/embedding_store.hpp"
#include "nmt/error.hpp"
#include "nmt/head/head.hpp"
#include "nmt/negmine/negmine.hpp"
#include "nmt/trainer/checkpoint.hpp"
#include "nmt/trainer/config.hpp"
#include "nmt/trainer/dataset.hpp"
#include "nmt/trainer/experiments.hpp"
#include "nmt/trainer/gradient_suite.hpp"
#include "nmt/trainer/trainer.hpp"

namespace fs = std::filesystem;
using namespace nmt;

namespace {

constexpr double kGradTolerance = 1e-4;

struct Overrides {
  std::vector<std::string> pairs;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--set", pairs, "Override a config key: --set key=value (repeatable)");
  }
  void apply(train::TrainConfig& config) const {
    for (const auto& kv : pairs) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) fail(ErrorKind::ConfigError, "--set expects key=value, got '" + kv + "'");
      train::set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1), fs::current_path());
    }
    config.validate();
  }
};

train::TrainConfig config_from(const fs::path& path, const Overrides& overrides) {
  auto config = train::load_config(path);
  overrides.apply(config);
  return config;
}

train::Dataset dataset_for(const train::TrainConfig& config) {
  if (config.data_dir.empty()) fail(ErrorKind::ConfigError, "config has no data_dir");
  return train::load_dataset(config.data_dir, config.task, config.class_count, config.max_len);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::IoError, "failed writing " + path.string());
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      fail(ErrorKind::ConfigError, "--negatives expects non-negative integers, got '" + item + "'");
    }
  }
  if (out.empty()) fail(ErrorKind::ConfigError, "--negatives needs at least one value");
  return out;
}

int cmd_train(const fs::path& config_path, const Overrides& overrides, const fs::path& metrics_path) {
  const auto config = config_from(config_path, overrides);
  const auto data = dataset_for(config);
  train::TrainHooks hooks;
  hooks.on_epoch = [](const train::EpochMetrics& m) {
    std::cerr << "epoch " << m.epoch << "  L_total " << fmt(m.total) << "  val_acc " << fmt(m.val_accuracy) << "  "
              << fmt(m.seconds, "%.2f") << "s\n";
  };
  const auto result = train::train_model(config, data, hooks);
  const std::string tsv = result.log.to_tsv();
  std::cout << tsv;
  if (!metrics_path.empty()) write_text(metrics_path, tsv);
  std::cout << "best_epoch\t" << result.best_epoch << "\n";
  if (!data.test.empty()) {
    std::cout << "test_acc\t" << fmt(train::evaluate_model(config, result.model, data.test, hooks)) << "\n";
  }
  if (!config.checkpoint.empty()) std::cerr << "checkpoint written to " << config.checkpoint.string() << "\n";
  return 0;
}

int cmd_eval(const fs::path& model_path, const fs::path& data_dir, const std::string& split_name,
             const fs::path& store_path) {
  const auto model = train::load_checkpoint(model_path);
  const auto data = train::load_dataset(data_dir, model.config.task, model.config.class_count,
                                        model.config.has_encoder ? model.config.encoder.max_len : seq::kDefaultMaxLen);
  const train::Split* split = &train::reporting_split(data);
  if (split_name == "train") split = &data.train;
  if (split_name == "valid") split = &data.valid;
  if (split_name == "test") split = &data.test;
  train::TrainConfig config;
  config.task = model.config.task;
  config.class_count = model.config.class_count;
  enc::EmbeddingStore store;
  train::TrainHooks hooks;
  if (!model.config.has_encoder) {
    if (store_path.empty()) fail(ErrorKind::ConfigError, "model has no encoder; pass --store");
    store = enc::load_embedding_store(store_path);
    hooks.store = &store;
  }
  const double acc = train::evaluate_model(config, model, *split, hooks);
  std::cout << "examples\t" << split->size() << "\naccuracy\t" << fmt(acc, "%.6f") << "\n";
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t instances) {
  const auto report = train::run_gradient_suite(seed, instances);
  for (const char* loss : {"L_N", "L_S", "L_total"}) {
    double worst = 0;
    std::size_t n = 0;
    for (const auto& c : report.cases) {
      if (c.loss == loss) {
        worst = std::max(worst, c.report.max_relative_error);
        ++n;
      }
    }
    std::cout << loss << "\tinstances " << n << "\tmax_rel_err " << fmt(worst, "%.3e") << "\n";
  }
  std::cout << "max_relative_error\t" << fmt(report.max_relative_error, "%.3e") << "\n";
  if (report.max_relative_error > kGradTolerance) {
    const auto* w = report.worst();
    fail(ErrorKind::NumericalError, "gradient check failed: " + w->loss + " seed " + std::to_string(w->seed) +
                                        " parameter " + w->report.parameter + "[" +
                                        std::to_string(w->report.coordinate) + "]");
  }
  return 0;
}

int cmd_sweep(const fs::path& config_path, const Overrides& overrides, const std::string& counts) {
  const auto config = config_from(config_path, overrides);
  const auto data = dataset_for(config);
  const auto ns = parse_counts(counts);
  std::cout << train::format_sweep(train::sweep_negative_counts(config, data, ns));
  return 0;
}

int cmd_ablation(const fs::path& config_path, const Overrides& overrides) {
  const auto config = config_from(config_path, overrides);
  const auto data = dataset_for(config);
  std::cout << train::format_ablation(train::scratch_vs_pretrained(config, data));
  return 0;
}

int cmd_pretrain(const fs::path& config_path, const Overrides& overrides, const fs::path& out,
                 std::uint64_t pretext_seed) {
  const auto config = config_from(config_path, overrides);
  train::SyntheticConfig synth;
  synth.task = config.task;
  synth.seed = pretext_seed;
  const auto pretext = train::make_motif_dataset(synth);
  const auto model = train::pretrain_encoder(config, pretext);
  train::save_checkpoint(out, model);
  std::cout << "pretrained checkpoint\t" << out.string() << "\n";
  return 0;
}

int cmd_attn(const fs::path& model_path, const std::string& id_a, const std::string& id_b, const fs::path& out_dir,
             const fs::path& data_dir, const fs::path& store_path, std::size_t top_k) {
  const auto model = train::load_checkpoint(model_path);
  enc::EmbeddingStore store;
  const bool use_store = !store_path.empty();
  if (use_store) store = enc::load_embedding_store(store_path);
  if (!model.config.has_encoder && !use_store) fail(ErrorKind::ConfigError, "model has no encoder; pass --store");

  auto resolve = [&](const train::Dataset* data, const std::string& id) -> seq::TokenSequence {
    if (data) return data->sequence(id);
    // Store-only lookup: the id is all the embedding source needs.
    const auto& m = store.at(id);
    return seq::TokenSequence{id, std::vector<std::uint8_t>(m.length(), 0)};
  };
  train::Dataset data;
  const train::Dataset* data_ptr = nullptr;
  if (!data_dir.empty()) {
    data = train::load_dataset(data_dir, model.config.task, model.config.class_count,
                               model.config.has_encoder ? model.config.encoder.max_len : seq::kDefaultMaxLen);
    data_ptr = &data;
  } else if (!use_store) {
    fail(ErrorKind::ConfigError, "attn needs --data or --store to resolve sequence ids");
  }
  const auto a = resolve(data_ptr, id_a);
  const auto b = resolve(data_ptr, id_b);
  const enc::EmbeddingStore* sp = use_store && !model.config.has_encoder ? &store : nullptr;

  // B's residues query A's residues; the reverse direction scores B.
  const auto att_ba = train::cross_attention_matrix(model, a, b, sp);
  const auto att_ab = train::cross_attention_matrix(model, b, a, sp);
  write_text(out_dir / "attention.csv", train::attention_csv(att_ba));

  std::string scores = "chain,residue,score\n", top = "chain,rank,residue,score\n";
  auto emit = [&](const std::string& chain, const head::AttentionMatrix& att) {
    const auto s = head::response_scores(att);
    for (std::size_t i = 0; i < s.size(); ++i) scores += chain + "," + std::to_string(i) + "," + fmt(s[i]) + "\n";
    const auto best = head::top_k_residues(s, top_k);
    for (std::size_t r = 0; r < best.size(); ++r) {
      top += chain + "," + std::to_string(r + 1) + "," + std::to_string(best[r].first) + "," + fmt(best[r].second) +
             "\n";
    }
  };
  emit(id_a, att_ba);
  emit(id_b, att_ab);
  write_text(out_dir / "scores.csv", scores);
  write_text(out_dir / "top_k.csv", top);

  double sum = 0;
  for (double v : att_ba.values.data()) sum += v;
  const double mean = sum / static_cast<double>(att_ba.values.size());
  write_text(out_dir / "summary.tsv", "rows\t" + std::to_string(att_ba.values.shape()[0]) + "\ncols\t" +
                                          std::to_string(att_ba.values.shape()[1]) + "\nmean_attention\t" + fmt(mean) +
                                          "\n");
  std::cout << "wrote attention.csv, scores.csv, top_k.csv, summary.tsv to " << out_dir.string() << "\n";
  return 0;
}

int cmd_sample(const fs::path& config_path, const Overrides& overrides, const std::string& anchor_id,
               std::uint64_t seed) {
  const auto config = config_from(config_path, overrides);
  const auto data = dataset_for(config);
  if (config.task == head::TaskKind::Pair) {
    const auto positions = neg::negative_pair_positions(data.train.pairs);
    std::cout << "negative_pairs\t" << positions.size() << "\n";
    for (std::size_t p : positions) {
      const auto& ex = data.train.pairs[p];
      std::cout << ex.seq_a.id << "\t" << ex.seq_b.id << "\t" << ex.label << "\n";
    }
    return 0;
  }
  const seq::LabeledExample* anchor = nullptr;
  for (const auto& ex : data.train.wise) {
    if (ex.seq.id == anchor_id) anchor = &ex;
  }
  if (!anchor) fail(ErrorKind::UnknownId, "anchor '" + anchor_id + "' is not in the training split");
  std::map<std::string, std::size_t> label_of;
  for (const auto& ex : data.train.wise) label_of[ex.seq.id] = ex.label;
  const neg::LabelIndex index(data.train.wise);
  std::mt19937_64 rng(seed);
  const auto set = neg::sample_negatives_wise(index, *anchor, config.negatives, rng);
  std::cout << "anchor\t" << set.anchor << "\t" << anchor->label << "\n";
  for (const auto& id : set.negatives) std::cout << "negative\t" << id << "\t" << label_of.at(id) << "\n";
  return 0;
}

int cmd_synth(const fs::path& out, const train::SyntheticConfig& synth) {
  train::write_dataset(out, train::make_motif_dataset(synth));
  std::cout << "synthetic " << head::to_string(synth.task) << " dataset written to " << out.string() << "\n";
  return 0;
}

int cmd_export_store(const fs::path& model_path, const fs::path& data_dir, const fs::path& out) {
  const auto model = train::load_checkpoint(model_path);
  if (!model.config.has_encoder) fail(ErrorKind::ConfigError, "model has no encoder to export");
  const auto data = train::load_dataset(data_dir, model.config.task, model.config.class_count,
                                        model.config.encoder.max_len);
  enc::EmbeddingStore store(model.config.encoder.out_dim);
  for (const auto& s : data.sequences) store.add({s.id, enc::encode_values(s, model.encoder)});
  enc::write_embedding_store(out, store);
  std::cout << "wrote " << store.size() << " records to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Negative-sample mining for sequence classifiers"};
  app.require_subcommand(1);

  fs::path config_path, model_path, data_dir, out, store_path, metrics_path;
  Overrides overrides;
  std::uint64_t seed = 0;
  std::size_t instances = 20, top_k = 2;
  std::string negatives = "1,2,4,8", split = "auto", id_a, id_b, anchor;
  train::SyntheticConfig synth;
  std::string synth_task = "wise";

  auto* train_cmd = app.add_subcommand("train", "Train a model from a config file");
  train_cmd->add_option("--config", config_path, "Config file")->required();
  train_cmd->add_option("--metrics", metrics_path, "Also write the metrics TSV here");
  overrides.add_to(train_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Accuracy of a checkpoint on a dataset");
  eval_cmd->add_option("--model", model_path, "Checkpoint")->required();
  eval_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  eval_cmd->add_option("--split", split, "train, valid, test or auto")
      ->check(CLI::IsMember({"auto", "train", "valid", "test"}));
  eval_cmd->add_option("--store", store_path, "Embedding store for encoder-less models");

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  grad_cmd->add_option("--seed", seed, "First instance seed");
  grad_cmd->add_option("--instances", instances, "Instances per loss")->check(CLI::PositiveNumber);

  auto* sweep_cmd = app.add_subcommand("sweep", "Accuracy against the number of negatives");
  sweep_cmd->add_option("--config", config_path, "Config file")->required();
  sweep_cmd->add_option("--negatives", negatives, "Comma-separated N values");
  overrides.add_to(sweep_cmd);

  auto* ablation_cmd = app.add_subcommand("ablation", "Scratch vs pretrained encoder, with and without L_N");
  ablation_cmd->add_option("--config", config_path, "Config file")->required();
  overrides.add_to(ablation_cmd);

  auto* pretrain_cmd = app.add_subcommand("pretrain", "Supervised pretext run producing a pretrained encoder");
  pretrain_cmd->add_option("--config", config_path, "Config file")->required();
  pretrain_cmd->add_option("--out", out, "Checkpoint to write")->required();
  pretrain_cmd->add_option("--pretext-seed", seed, "Seed of the synthetic pretext dataset");
  overrides.add_to(pretrain_cmd);

  auto* attn_cmd = app.add_subcommand("attn", "Export cross-attention and response scores for a pair");
  attn_cmd->add_option("--model", model_path, "Checkpoint")->required();
  attn_cmd->add_option("--a", id_a, "Key sequence id")->required();
  attn_cmd->add_option("--b", id_b, "Query sequence id")->required();
  attn_cmd->add_option("--out", out, "Output directory")->required();
  attn_cmd->add_option("--data", data_dir, "Dataset directory resolving the ids");
  attn_cmd->add_option("--store", store_path, "Embedding store resolving the ids");
  attn_cmd->add_option("--top-k", top_k, "Residues listed per chain")->check(CLI::PositiveNumber);

  auto* sample_cmd = app.add_subcommand("sample", "Print the negatives drawn for an anchor");
  sample_cmd->add_option("--config", config_path, "Config file")->required();
  sample_cmd->add_option("--anchor", anchor, "Anchor id (protein-wise tasks)");
  sample_cmd->add_option("--seed", seed, "Sampling seed");
  overrides.add_to(sample_cmd);

  auto* synth_cmd = app.add_subcommand("synth", "Write the planted-motif benchmark");
  synth_cmd->add_option("--out", out, "Dataset directory")->required();
  synth_cmd->add_option("--task", synth_task, "wise or pair")->check(CLI::IsMember({"wise", "pair"}));
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_option("--train", synth.train, "Training examples");
  synth_cmd->add_option("--valid", synth.valid, "Validation examples");
  synth_cmd->add_option("--test", synth.test, "Test examples");

  auto* export_cmd = app.add_subcommand("export-store", "Encode a dataset's sequences into an NMEB store");
  export_cmd->add_option("--model", model_path, "Checkpoint")->required();
  export_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  export_cmd->add_option("--out", out, "NMEB file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*train_cmd) return cmd_train(config_path, overrides, metrics_path);
    if (*eval_cmd) return cmd_eval(model_path, data_dir, split, store_path);
    if (*grad_cmd) return cmd_gradcheck(seed, instances);
    if (*sweep_cmd) return cmd_sweep(config_path, overrides, negatives);
    if (*ablation_cmd) return cmd_ablation(config_path, overrides);
    if (*pretrain_cmd) return cmd_pretrain(config_path, overrides, out, seed ? seed : 1000);
    if (*attn_cmd) return cmd_attn(model_path, id_a, id_b, out, data_dir, store_path, top_k);
    if (*sample_cmd) return cmd_sample(config_path, overrides, anchor, seed);
    if (*synth_cmd) {
      synth.task = head::parse_task(synth_task);
      return cmd_synth(out, synth);
    }
    if (*export_cmd) return cmd_export_store(model_path, data_dir, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: IoError: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
