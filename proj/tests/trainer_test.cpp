#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "nmt/error.hpp"
#include "nmt/numcore/adam.hpp"
#include "nmt/numcore/ops.hpp"
#include "nmt/trainer/checkpoint.hpp"
#include "nmt/trainer/config.hpp"
#include "nmt/trainer/dataset.hpp"
#include "nmt/trainer/experiments.hpp"
#include "nmt/trainer/gradient_suite.hpp"
#include "nmt/trainer/trainer.hpp"

namespace nmt::train {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nmt_trainer_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

template <typename E>
ErrorKind kind_of(E&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an nmt::Error";
  return ErrorKind::IoError;
}

/// Small, fast configuration: toy encoder, short training.
TrainConfig toy_config(head::TaskKind task = head::TaskKind::Wise) {
  TrainConfig c;
  c.task = task;
  c.d_model = 16;
  c.layers = 1;
  c.heads = 2;
  c.ff = 32;
  c.hidden = 16;
  c.epochs = 2;
  c.batch_size = 8;
  c.negatives = 2;
  c.max_len = 64;
  return c;
}

Dataset tiny_motif(head::TaskKind task = head::TaskKind::Wise, std::size_t train = 24) {
  SyntheticConfig s;
  s.task = task;
  s.train = train;
  s.valid = 8;
  s.test = 8;
  s.min_len = 10;
  s.max_len = 14;
  return make_motif_dataset(s);
}

std::vector<float> as_vec(const num::Tensor<float>& t) { return {t.data().begin(), t.data().end()}; }

bool same_parameters(const head::Model<float>& a, const head::Model<float>& b) {
  const auto pa = a.parameters(true), pb = b.parameters(true);
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i]->value.data().size() != pb[i]->value.data().size()) return false;
    for (std::size_t k = 0; k < pa[i]->value.data().size(); ++k) {
      if (pa[i]->value.data()[k] != pb[i]->value.data()[k]) return false;
    }
  }
  return true;
}

class CountingSampler : public neg::NegativeSampler {
 public:
  mutable std::atomic<std::size_t> calls{0};
  neg::NegativeSet wise(const neg::LabelIndex& index, const seq::LabeledExample& anchor, std::size_t n,
                        std::mt19937_64& rng) const override {
    ++calls;
    return NegativeSampler::wise(index, anchor, n, rng);
  }
  std::vector<std::size_t> pair(std::span<const seq::PairExample> batch) const override {
    ++calls;
    return NegativeSampler::pair(batch);
  }
};

// ---- config ----

TEST(Config, DefaultsMatchDocumentation) {
  const TrainConfig c = parse_config("");
  EXPECT_EQ(c.task, head::TaskKind::Wise);
  EXPECT_EQ(c.batch_size, 16u);
  EXPECT_EQ(c.epochs, 30u);
  EXPECT_DOUBLE_EQ(c.learning_rate, 1e-3);
  EXPECT_EQ(c.negatives, 4u);
  EXPECT_DOUBLE_EQ(c.lambda, 1.0);
  EXPECT_EQ(c.max_len, 550u);
  EXPECT_EQ(c.hidden, 128u);
  EXPECT_EQ(c.encoder_mode, EncoderMode::Scratch);
}

TEST(Config, ParsesKeysCommentsAndWhitespace) {
  const auto c = parse_config(
      "# comment line\n"
      "task = pair\n"
      "  negatives=8   # trailing comment\n"
      "lambda = 0.5\r\n"
      "\n"
      "encoder_mode = frozen\n"
      "verification = true\n");
  EXPECT_EQ(c.task, head::TaskKind::Pair);
  EXPECT_EQ(c.negatives, 8u);
  EXPECT_DOUBLE_EQ(c.lambda, 0.5);
  EXPECT_EQ(c.encoder_mode, EncoderMode::Frozen);
  EXPECT_TRUE(c.verification);
}

TEST(Config, UnknownKeyIsFatal) {
  EXPECT_EQ(kind_of([] { parse_config("negativs = 4\n"); }), ErrorKind::ConfigError);
}

TEST(Config, DuplicateKeyIsFatal) {
  EXPECT_EQ(kind_of([] { parse_config("epochs = 3\nepochs = 4\n"); }), ErrorKind::ConfigError);
}

TEST(Config, MalformedValuesAreFatal) {
  EXPECT_EQ(kind_of([] { parse_config("epochs = three\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { parse_config("lambda = 1.0x\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { parse_config("negatives = -1\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { parse_config("verification = maybe\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { parse_config("task = triple\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { parse_config("epochs 3\n"); }), ErrorKind::ConfigError);
}

TEST(Config, OutOfRangeValuesAreFatal) {
  EXPECT_EQ(kind_of([] { parse_config("batch_size = 0\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { parse_config("task = pair\nclass_count = 3\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { parse_config("d_model = 30\nheads = 4\n"); }), ErrorKind::ConfigError);
}

TEST(Config, RelativePathsResolveAgainstConfigDirectory) {
  const auto dir = scratch_dir("config_paths");
  write_file(dir / "run.cfg", "data_dir = data\ncheckpoint = /abs/model.nmck\n");
  const auto c = load_config(dir / "run.cfg");
  EXPECT_EQ(c.data_dir, dir / "data");
  EXPECT_EQ(c.checkpoint, fs::path("/abs/model.nmck"));
}

TEST(Config, MissingFileIsIoError) {
  EXPECT_EQ(kind_of([] { load_config("/nonexistent/nmt.cfg"); }), ErrorKind::IoError);
}

TEST(Config, FormatRoundTrips) {
  TrainConfig c;
  c.lambda = 0.3;
  c.negatives = 7;
  c.task = head::TaskKind::Pair;
  c.encoder_mode = EncoderMode::Finetune;
  c.pretrained = "/x/y.nmck";
  const std::string text = format_config(c);
  EXPECT_EQ(format_config(parse_config(text)), text);
}

// ---- dataset ----

TEST(Dataset, WriteThenLoadPreservesEverything) {
  const auto dir = scratch_dir("dataset_round_trip");
  const auto data = tiny_motif();
  write_dataset(dir, data);
  const auto back = load_dataset(dir, head::TaskKind::Wise, 2);
  ASSERT_EQ(back.sequences.size(), data.sequences.size());
  ASSERT_EQ(back.train.size(), data.train.size());
  ASSERT_EQ(back.valid.size(), data.valid.size());
  ASSERT_EQ(back.test.size(), data.test.size());
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    EXPECT_EQ(back.train.wise[i].seq.id, data.train.wise[i].seq.id);
    EXPECT_EQ(back.train.wise[i].seq.tokens, data.train.wise[i].seq.tokens);
    EXPECT_EQ(back.train.wise[i].label, data.train.wise[i].label);
  }
}

TEST(Dataset, PairRoundTrip) {
  const auto dir = scratch_dir("dataset_pairs");
  const auto data = tiny_motif(head::TaskKind::Pair);
  write_dataset(dir, data);
  const auto back = load_dataset(dir, head::TaskKind::Pair, 2);
  ASSERT_EQ(back.train.pairs.size(), data.train.pairs.size());
  for (std::size_t i = 0; i < data.train.pairs.size(); ++i) {
    EXPECT_EQ(back.train.pairs[i].seq_a.id, data.train.pairs[i].seq_a.id);
    EXPECT_EQ(back.train.pairs[i].seq_b.tokens, data.train.pairs[i].seq_b.tokens);
    EXPECT_EQ(back.train.pairs[i].label, data.train.pairs[i].label);
  }
}

TEST(Dataset, TableIdMissingFromFastaIsUnknownId) {
  const auto dir = scratch_dir("dataset_unknown");
  write_file(dir / "sequences.fasta", ">p1\nACDE\n");
  write_file(dir / "train.tsv", "p1\t0\np2\t1\n");
  EXPECT_EQ(kind_of([&] { load_dataset(dir, head::TaskKind::Wise, 2); }), ErrorKind::UnknownId);
}

TEST(Dataset, MissingTrainTableIsIoError) {
  const auto dir = scratch_dir("dataset_missing");
  write_file(dir / "sequences.fasta", ">p1\nACDE\n");
  EXPECT_EQ(kind_of([&] { load_dataset(dir, head::TaskKind::Wise, 2); }), ErrorKind::IoError);
}

TEST(Dataset, OptionalSplitsMayBeAbsent) {
  const auto dir = scratch_dir("dataset_optional");
  write_file(dir / "sequences.fasta", ">p1\nACDE\n>p2\nWWW\n");
  write_file(dir / "train.tsv", "p1\t0\np2\t1\n");
  const auto d = load_dataset(dir, head::TaskKind::Wise, 2);
  EXPECT_EQ(d.train.size(), 2u);
  EXPECT_TRUE(d.valid.empty());
  EXPECT_TRUE(d.test.empty());
  EXPECT_EQ(&reporting_split(d), &d.train);
}

TEST(Dataset, LabelBeyondClassCountIsRejected) {
  const auto dir = scratch_dir("dataset_label");
  write_file(dir / "sequences.fasta", ">p1\nACDE\n");
  write_file(dir / "train.tsv", "p1\t2\n");
  EXPECT_EQ(kind_of([&] { load_dataset(dir, head::TaskKind::Wise, 2); }), ErrorKind::LabelOutOfRange);
}

// ---- synthetic motif task ----

TEST(Synthetic, WiseLabelsFollowTheMotif) {
  SyntheticConfig s;
  const auto d = make_motif_dataset(s);
  EXPECT_EQ(d.train.size(), s.train);
  EXPECT_EQ(d.valid.size(), s.valid);
  EXPECT_EQ(d.test.size(), s.test);
  std::size_t positives = 0;
  for (const auto* split : {&d.train, &d.valid, &d.test}) {
    for (const auto& ex : split->wise) {
      const std::string r = seq::detokenize(ex.seq);
      EXPECT_GE(r.size(), s.min_len);
      EXPECT_LE(r.size(), s.max_len);
      EXPECT_EQ(contains_motif(r, s.motif), ex.label == 1) << ex.seq.id;
      EXPECT_FALSE(contains_motif(r, s.partner_motif));
      positives += ex.label;
    }
  }
  EXPECT_EQ(positives, (s.train + s.valid + s.test) / 2);
}

TEST(Synthetic, PairPositiveIffComplementaryCarriers) {
  SyntheticConfig s;
  s.task = head::TaskKind::Pair;
  const auto d = make_motif_dataset(s);
  std::size_t positives = 0;
  for (const auto& p : d.train.pairs) {
    const bool a = contains_motif(seq::detokenize(p.seq_a), s.motif);
    const bool b = contains_motif(seq::detokenize(p.seq_b), s.partner_motif);
    EXPECT_EQ(a && b, p.label == 1) << p.seq_a.id;
    positives += p.label;
  }
  EXPECT_EQ(positives, s.train / 2);
}

TEST(Synthetic, SeedDeterminesData) {
  SyntheticConfig s;
  const auto a = make_motif_dataset(s), b = make_motif_dataset(s);
  s.seed = 2;
  const auto c = make_motif_dataset(s);
  EXPECT_EQ(a.sequences[0].tokens, b.sequences[0].tokens);
  EXPECT_NE(a.sequences[0].tokens, c.sequences[0].tokens);
}

// ---- checkpoint ----

TEST(Checkpoint, WriteReadWriteIsByteIdentical) {
  const auto model = head::init_model<float>(toy_config().model_config(), 3);
  const std::string first = serialize_checkpoint(model);
  EXPECT_EQ(first.substr(0, 4), "NMCK");
  const std::string second = serialize_checkpoint(deserialize_checkpoint(first));
  EXPECT_EQ(first, second);
}

TEST(Checkpoint, FileRoundTripPreservesModelAndAccuracy) {
  const auto dir = scratch_dir("checkpoint_file");
  const auto data = tiny_motif();
  TrainConfig c = toy_config();
  c.checkpoint = dir / "sub" / "model.nmck";
  const auto result = train_model(c, data);
  ASSERT_TRUE(fs::exists(c.checkpoint));
  const auto loaded = load_checkpoint(c.checkpoint);
  EXPECT_TRUE(same_parameters(loaded, result.model));
  EXPECT_EQ(evaluate_model(c, loaded, data.test), evaluate_model(c, result.model, data.test));
  save_checkpoint(dir / "again.nmck", loaded);
  EXPECT_EQ(read_bytes(dir / "again.nmck"), read_bytes(c.checkpoint));
}

TEST(Checkpoint, MissingFileIsCheckpointNotFound) {
  EXPECT_EQ(kind_of([] { load_checkpoint("/nonexistent/model.nmck"); }), ErrorKind::CheckpointNotFound);
  EXPECT_EQ(kind_of([] { load_checkpoint(""); }), ErrorKind::CheckpointNotFound);
}

TEST(Checkpoint, CorruptionIsFormatError) {
  const auto model = head::init_model<float>(toy_config().model_config(), 3);
  std::string bytes = serialize_checkpoint(model);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(kind_of([&] { deserialize_checkpoint(bad_magic); }), ErrorKind::FormatError);
  EXPECT_EQ(kind_of([&] { deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)); }), ErrorKind::FormatError);

  // Dropping the last tensor leaves a parameter missing.
  auto tensors = deserialize_tensors(bytes);
  tensors.pop_back();
  EXPECT_EQ(kind_of([&] { deserialize_checkpoint(serialize_tensors(tensors)); }), ErrorKind::FormatError);
}

TEST(Checkpoint, TensorLayoutIsLittleEndian) {
  num::Tensor<float> t({2});
  t.data()[0] = 1.0f;
  t.data()[1] = -2.0f;
  const std::string b = serialize_tensors({{"ab", t}});
  // magic, version, name length, name, rank, dim, 2 floats
  ASSERT_EQ(b.size(), 4u + 4 + 2 + 2 + 1 + 4 + 8);
  EXPECT_EQ(b.substr(0, 4), "NMCK");
  EXPECT_EQ(static_cast<unsigned char>(b[4]), 1u);
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 2u);
  EXPECT_EQ(b.substr(10, 2), "ab");
  EXPECT_EQ(static_cast<unsigned char>(b[12]), 1u);
  EXPECT_EQ(static_cast<unsigned char>(b[13]), 2u);
  // 1.0f = 0x3f800000
  EXPECT_EQ(static_cast<unsigned char>(b[17]), 0x00u);
  EXPECT_EQ(static_cast<unsigned char>(b[20]), 0x3fu);
}

// ---- training ----

TEST(Train, FixedSeedGivesIdenticalRuns) {
  const auto data = tiny_motif();
  const auto c = toy_config();
  const auto a = train_model(c, data), b = train_model(c, data);
  EXPECT_TRUE(a.log.same_values(b.log));
  EXPECT_TRUE(same_parameters(a.last, b.last));
  EXPECT_TRUE(same_parameters(a.model, b.model));
}

TEST(Train, DifferentSeedsDiffer) {
  const auto data = tiny_motif();
  auto c = toy_config();
  const auto a = train_model(c, data);
  c.seed = 1;
  const auto b = train_model(c, data);
  EXPECT_FALSE(same_parameters(a.last, b.last));
}

TEST(Train, ZeroNegativesEqualsZeroLambda) {
  for (auto task : {head::TaskKind::Wise, head::TaskKind::Pair}) {
    const auto data = tiny_motif(task);
    auto c0 = toy_config(task);
    c0.negatives = 0;
    auto c1 = toy_config(task);
    c1.lambda = 0.0;
    const auto a = train_model(c0, data), b = train_model(c1, data);
    EXPECT_TRUE(same_parameters(a.last, b.last));
    EXPECT_TRUE(a.log.same_values(b.log));
  }
}

TEST(Train, LambdaZeroNeverReadsTheSampler) {
  for (auto task : {head::TaskKind::Wise, head::TaskKind::Pair}) {
    const auto data = tiny_motif(task);
    CountingSampler sampler;
    TrainHooks hooks;
    hooks.sampler = &sampler;
    auto c = toy_config(task);
    c.lambda = 0.0;
    hooks.max_steps = 1;
    train_model(c, data, hooks);
    EXPECT_EQ(sampler.calls.load(), 0u);
    c.lambda = 1.0;
    train_model(c, data, hooks);
    EXPECT_GT(sampler.calls.load(), 0u);
  }
}

TEST(Train, NegativeLossIsReportedWhenEnabled) {
  const auto data = tiny_motif();
  const auto r = train_model(toy_config(), data);
  for (const auto& e : r.log.epochs) {
    EXPECT_GT(e.negative, 0.0);
    EXPECT_NEAR(e.total, e.supervised + e.negative, 1e-6);
  }
}

TEST(Train, FirstBatchLossNearLogC) {
  for (std::size_t classes : {2u, 5u}) {
    Dataset d;
    std::mt19937_64 rng(classes);
    for (std::size_t i = 0; i < 40; ++i) {
      std::string r;
      for (int k = 0; k < 20; ++k) r += seq::kCanonicalResidues[rng() % 20];
      d.sequences.push_back(seq::tokenize(r, 550, "s" + std::to_string(i)));
      d.train.wise.push_back({d.sequences.back(), i % classes});
    }
    d.class_count = classes;
    d.index_sequences();
    auto c = toy_config();
    c.class_count = classes;
    c.batch_size = 16;
    c.d_model = 64;
    c.heads = 4;
    c.ff = 256;
    c.hidden = 128;
    c.layers = 2;
    TrainHooks hooks;
    hooks.max_steps = 1;
    const auto r = train_model(c, d, hooks);
    ASSERT_EQ(r.steps, 1u);
    const double ln_c = std::log(static_cast<double>(classes));
    EXPECT_NEAR(r.log.epochs[0].supervised, ln_c, 0.2 * ln_c) << classes << " classes";
  }
}

TEST(Train, NonFiniteLossAbortsWithBatchIndex) {
  const auto data = tiny_motif();
  auto c = toy_config();
  c.learning_rate = 1e30;
  try {
    train_model(c, data);
    FAIL() << "expected NumericalError";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NumericalError);
    EXPECT_NE(std::string(e.what()).find("batch "), std::string::npos);
  }
}

TEST(Train, NoNegativesNamesTheAnchor) {
  Dataset d;
  for (std::size_t i = 0; i < 4; ++i) {
    d.sequences.push_back(seq::tokenize("ACDEFG", 550, "only" + std::to_string(i)));
    d.train.wise.push_back({d.sequences.back(), 1});
  }
  d.index_sequences();
  try {
    train_model(toy_config(), d);
    FAIL() << "expected NoNegativesAvailable";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoNegativesAvailable);
    EXPECT_NE(std::string(e.what()).find("only"), std::string::npos);
  }
}

TEST(Train, ClassCountMismatchIsConfigError) {
  const auto data = tiny_motif();
  auto c = toy_config();
  c.class_count = 3;
  EXPECT_EQ(kind_of([&] { train_model(c, data); }), ErrorKind::ConfigError);
}

TEST(Train, KeepsBestValidationModel) {
  const auto data = tiny_motif();
  auto c = toy_config();
  c.epochs = 4;
  const auto r = train_model(c, data);
  double best = -1;
  std::size_t best_epoch = 0;
  for (const auto& e : r.log.epochs) {
    if (e.val_accuracy > best) {
      best = e.val_accuracy;
      best_epoch = e.epoch;
    }
  }
  EXPECT_EQ(r.best_epoch, best_epoch);
  EXPECT_EQ(r.best_val_accuracy, best);
  EXPECT_DOUBLE_EQ(evaluate_model(c, r.model, data.valid), best);
}

TEST(Train, MetricsLogTsv) {
  const auto data = tiny_motif();
  const auto r = train_model(toy_config(), data);
  const std::string tsv = r.log.to_tsv();
  EXPECT_EQ(tsv.substr(0, tsv.find('\n')), "epoch\tL_S\tL_N\tL_total\tval_acc");
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 3);
  for (std::size_t i = 0; i < r.log.epochs.size(); ++i) {
    EXPECT_EQ(r.log.epochs[i].epoch, i + 1);
    EXPECT_GE(r.log.epochs[i].val_accuracy, 0.0);
    EXPECT_LE(r.log.epochs[i].val_accuracy, 1.0);
    EXPECT_GE(r.log.epochs[i].seconds, 0.0);
  }
}

TEST(Train, VerificationModeRunsInDoublePrecision) {
  const auto data = tiny_motif();
  auto c = toy_config();
  c.verification = true;
  const auto r = train_model(c, data);
  EXPECT_EQ(r.log.epochs.size(), 2u);
  EXPECT_TRUE(std::isfinite(r.log.epochs.back().total));
}

TEST(Train, FrozenAndStoreModesLeaveEncoderUntouched) {
  const auto data = tiny_motif();
  auto c = toy_config();
  c.encoder_mode = EncoderMode::Frozen;
  const auto start = initial_model<float>(c);
  const auto r = train_model(c, data);
  const auto pa = start.encoder.parameters(), pb = r.last.encoder.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(as_vec(pa[i]->value), as_vec(pb[i]->value)) << pa[i]->name;

  enc::EmbeddingStore store(6);
  std::mt19937_64 rng(4);
  std::normal_distribution<float> g;
  for (const auto& s : data.sequences) {
    num::Tensor<float> m({s.length(), 6});
    for (float& x : m.data()) x = g(rng);
    store.add({s.id, m});
  }
  c.encoder_mode = EncoderMode::Store;
  TrainHooks hooks;
  hooks.store = &store;
  const auto rs = train_model(c, data, hooks);
  EXPECT_FALSE(rs.model.config.has_encoder);
  EXPECT_EQ(rs.model.config.hidden, 6u);
  const double acc = evaluate_model(c, rs.model, data.test, hooks);
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
}

TEST(Train, StoreRowCountMustMatchResidues) {
  const auto data = tiny_motif();
  auto c = toy_config();
  c.encoder_mode = EncoderMode::Store;
  enc::EmbeddingStore store(4);
  for (const auto& s : data.sequences) store.add({s.id, num::Tensor<float>({s.length() + 1, 4})});
  TrainHooks hooks;
  hooks.store = &store;
  EXPECT_EQ(kind_of([&] { train_model(c, data, hooks); }), ErrorKind::ShapeError);
}

TEST(Train, FinetuneRequiresPretrainedCheckpoint) {
  const auto data = tiny_motif();
  auto c = toy_config();
  c.encoder_mode = EncoderMode::Finetune;
  EXPECT_EQ(kind_of([&] { train_model(c, data); }), ErrorKind::CheckpointNotFound);
  c.pretrained = "/nonexistent/pre.nmck";
  EXPECT_EQ(kind_of([&] { train_model(c, data); }), ErrorKind::CheckpointNotFound);
}

TEST(Train, FinetuneStartsFromPretrainedEncoder) {
  const auto data = tiny_motif();
  auto c = toy_config();
  const auto pre = head::init_model<float>(c.model_config(), 99);
  c.encoder_mode = EncoderMode::Finetune;
  TrainHooks hooks;
  hooks.pretrained = &pre;
  const auto m = initial_model<float>(c, hooks);
  EXPECT_EQ(as_vec(m.encoder.token_embedding.value), as_vec(pre.encoder.token_embedding.value));
  const auto fresh = head::init_model<float>(c.model_config(), c.seed);
  EXPECT_EQ(as_vec(m.classifier.weight.value), as_vec(fresh.classifier.weight.value));

  auto mismatched = c;
  mismatched.d_model = 32;
  EXPECT_EQ(kind_of([&] { initial_model<float>(mismatched, hooks); }), ErrorKind::ConfigError);
}

TEST(Train, MotifTaskReachesHighTrainAccuracy) {
  const auto data = make_motif_dataset(SyntheticConfig{});
  TrainConfig c;  // default dimensions and schedule
  c.negatives = 0;
  const auto r = train_model(c, data);
  EXPECT_EQ(r.log.epochs.size(), 30u);
  EXPECT_GE(evaluate_model(c, r.last, data.train), 0.95);
}

// ---- shared key ----

TEST(SharedKey, NegativeLossMovesTheSharedKey) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto data = tiny_motif(head::TaskKind::Wise, 16);
    auto c = toy_config();
    c.seed = seed;
    auto model = head::init_model<float>(c.model_config(), seed);
    const auto source = head::EmbeddingSource<float>::from_encoder(model.encoder, true);
    const neg::NegativeSampler sampler;
    const neg::LabelIndex index(data.train.wise);
    std::mt19937_64 rng(seed);
    const std::vector<std::size_t> positions{0, 1, 2, 3};
    const auto plan = plan_batch(c, data.train, positions, index, sampler, rng);

    num::Tape<float> tape;
    const auto loss = batch_loss(tape, model, source, data, data.train, plan, c);
    const auto grads = tape.backward(loss.negative);
    ASSERT_TRUE(grads.contains(model.proj.key));
    double norm = 0;
    const auto gk = grads.of(model.proj.key);
    for (float g : gk.data()) norm += double(g) * g;
    EXPECT_GT(norm, 0.0) << "seed " << seed;

    // One step on lambda * L_N: the key moves for lambda = 1, not for lambda = 0.
    auto step_change = [&](double lambda) {
      auto m = model;
      const auto src = head::EmbeddingSource<float>::from_encoder(m.encoder, true);
      num::Tape<float> t;
      const auto l = batch_loss(t, m, src, data, data.train, plan, c);
      auto objective = num::scale(l.negative, static_cast<float>(lambda));
      auto params = m.parameters(true);
      num::AdamState<float> adam(num::AdamConfig{1e-3, 0.9, 0.999, 1e-8});
      num::adam_step<float>(params, t.backward(objective), adam);
      double d = 0;
      for (std::size_t k = 0; k < m.proj.key.value.data().size(); ++k) {
        const double diff = double(m.proj.key.value.data()[k]) - model.proj.key.value.data()[k];
        d += diff * diff;
      }
      return std::sqrt(d);
    };
    EXPECT_GT(step_change(1.0), step_change(0.0)) << "seed " << seed;
    EXPECT_EQ(step_change(0.0), 0.0);

    // A plain gradient step on L_total moves the key further with lambda = 1.
    auto total_key_norm = [&](double lambda) {
      auto cc = c;
      cc.lambda = lambda;
      num::Tape<float> t;
      const auto l = batch_loss(t, model, source, data, data.train, plan, cc);
      double n2 = 0;
      const auto grads = t.backward(l.total);
      const auto gk = grads.of(model.proj.key);
      for (float g : gk.data()) n2 += double(g) * g;
      return std::sqrt(n2);
    };
    EXPECT_GT(total_key_norm(1.0), total_key_norm(0.0)) << "seed " << seed;
  }
}

// ---- evaluate ----

/// Store-backed model whose prediction is class 1 iff the first embedding
/// coordinate is positive.
struct SignModel {
  enc::EmbeddingStore store{2};
  head::Model<float> model;
  Split split;
  TrainConfig config;

  explicit SignModel(const std::vector<std::pair<float, std::size_t>>& rows, bool constant = false) {
    head::ModelConfig mc;
    mc.has_encoder = false;
    mc.hidden = 2;
    model = head::init_model<float>(mc, 0);
    model.proj.value.value = num::Tensor<float>({2, 2});
    model.proj.value.value(0, 0) = 1;
    model.proj.value.value(1, 1) = 1;
    model.classifier.weight.value = num::Tensor<float>({2, 2});
    model.classifier.bias.value = num::Tensor<float>({2});
    if (constant) {
      model.classifier.bias.value.data()[0] = 1;
    } else {
      model.classifier.weight.value(0, 0) = -1;
      model.classifier.weight.value(1, 0) = 1;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string id = "e" + std::to_string(i);
      num::Tensor<float> m({1, 2});
      m(0, 0) = rows[i].first;
      store.add({id, m});
      split.wise.push_back({seq::TokenSequence{id, {0}}, rows[i].second});
    }
    config.encoder_mode = EncoderMode::Store;
  }

  double accuracy() {
    TrainHooks hooks;
    hooks.store = &store;
    return evaluate_model(config, model, split, hooks);
  }
};

TEST(Evaluate, PerfectModelScoresOne) {
  std::vector<std::pair<float, std::size_t>> rows;
  for (std::size_t i = 0; i < 10; ++i) rows.push_back({i % 2 ? 1.0f : -1.0f, i % 2});
  EXPECT_EQ(SignModel(rows).accuracy(), 1.0);
}

TEST(Evaluate, ConstantModelScoresHalfOnBalancedData) {
  std::vector<std::pair<float, std::size_t>> rows;
  for (std::size_t i = 0; i < 10; ++i) rows.push_back({i % 2 ? 1.0f : -1.0f, i % 2});
  EXPECT_EQ(SignModel(rows, true).accuracy(), 0.5);
}

TEST(Evaluate, MatchesHandCountedFixture) {
  // predictions 1, 0, 1, 0, 1 against labels 1, 1, 0, 0, 0: two correct
  EXPECT_DOUBLE_EQ(SignModel({{0.3f, 1}, {-0.2f, 1}, {0.9f, 0}, {-0.7f, 0}, {0.1f, 0}}).accuracy(), 0.4);
}

TEST(Evaluate, ThreadCountDoesNotChangePredictions) {
  std::vector<std::pair<float, std::size_t>> rows;
  std::mt19937_64 rng(2);
  std::normal_distribution<float> g;
  for (std::size_t i = 0; i < 64; ++i) rows.push_back({g(rng), i % 2});
  SignModel m(rows);
  const auto src = head::EmbeddingSource<float>::from_store(m.store);
  const auto one = predict_split(m.model, src, m.split, 1);
  const auto four = predict_split(m.model, src, m.split, 4);
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(one[i].probabilities, four[i].probabilities);
}

TEST(Evaluate, ClassCountMismatchIsConfigError) {
  SignModel m({{1.0f, 0}, {1.0f, 2}});
  EXPECT_EQ(kind_of([&] { m.accuracy(); }), ErrorKind::ConfigError);
}

TEST(Evaluate, PredictionsIgnoreSamplingState) {
  const auto data = tiny_motif();
  const auto model = head::init_model<float>(toy_config().model_config(), 5);
  const auto src = head::EmbeddingSource<float>::from_encoder(model.encoder, false);
  const auto reference = predict_split(model, src, data.test, 1);
  const neg::LabelIndex index(data.train.wise);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    neg::sample_negatives_wise(index, data.train.wise[0], 3, rng);
    const auto again = predict_split(model, src, data.test, 1);
    for (std::size_t i = 0; i < again.size(); ++i) EXPECT_EQ(again[i].probabilities, reference[i].probabilities);
  }
}

// ---- experiments ----

TEST(Experiments, SweepHasOneRowPerCount) {
  const auto data = tiny_motif(head::TaskKind::Wise, 16);
  auto c = toy_config();
  c.epochs = 1;
  c.sweep_seeds = 3;
  const std::vector<std::size_t> ns{0, 2};
  const auto rows = sweep_negative_counts(c, data, ns);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].negatives, 0u);
  EXPECT_EQ(rows[0].accuracies.size(), 3u);
  const std::string table = format_sweep(rows);
  EXPECT_EQ(table.substr(0, table.find('\n')), "N\tmean_acc\tstd");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
}

TEST(Experiments, SweepStatisticsMatchPerSeedRuns) {
  const auto data = tiny_motif(head::TaskKind::Wise, 16);
  auto c = toy_config();
  c.epochs = 1;
  c.sweep_seeds = 3;
  const std::vector<std::size_t> ns{0};
  const auto row = sweep_negative_counts(c, data, ns)[0];
  std::vector<double> accs;
  for (std::size_t s = 0; s < 3; ++s) {
    auto cs = c;
    cs.negatives = 0;
    cs.seed = s;
    accs.push_back(evaluate_model(cs, train_model(cs, data).model, data.test));
  }
  const double mean = (accs[0] + accs[1] + accs[2]) / 3;
  double var = 0;
  for (double a : accs) var += (a - mean) * (a - mean);
  EXPECT_DOUBLE_EQ(row.mean_accuracy, mean);
  EXPECT_NEAR(row.std_accuracy, std::sqrt(var / 2), 1e-12);
}

TEST(Experiments, AblationHasFourRowsAndNeedsCheckpoint) {
  const auto data = tiny_motif(head::TaskKind::Wise, 16);
  auto c = toy_config();
  c.epochs = 1;
  c.sweep_seeds = 1;
  EXPECT_EQ(kind_of([&] { scratch_vs_pretrained(c, data); }), ErrorKind::CheckpointNotFound);
  const auto pre = pretrain_encoder(c, tiny_motif(head::TaskKind::Wise, 16));
  TrainHooks hooks;
  hooks.pretrained = &pre;
  const auto rows = scratch_vs_pretrained(c, data, hooks);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].encoder, "scratch");
  EXPECT_EQ(rows[0].classifier, "supervised");
  EXPECT_EQ(rows[0].delta, 0.0);
  EXPECT_EQ(rows[3].encoder, "pretrained");
  EXPECT_EQ(rows[3].classifier, "negmine");
  for (const auto& r : rows) EXPECT_DOUBLE_EQ(r.delta, r.accuracy - rows[0].accuracy);
}

TEST(Experiments, AttentionExportIsRowStochastic) {
  const auto data = tiny_motif(head::TaskKind::Pair);
  const auto model = head::init_model<float>(toy_config(head::TaskKind::Pair).model_config(), 1);
  const auto& p = data.train.pairs[0];
  const auto att = cross_attention_matrix(model, p.seq_a, p.seq_b);
  ASSERT_EQ(att.values.shape()[0], p.seq_b.length());
  ASSERT_EQ(att.values.shape()[1], p.seq_a.length());
  for (std::size_t i = 0; i < att.values.shape()[0]; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < att.values.shape()[1]; ++j) s += att.values(i, j);
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  const std::string csv = attention_csv(att);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(p.seq_b.length() + 1));
  const std::string header = csv.substr(0, csv.find('\n'));
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), static_cast<long>(p.seq_a.length()));
}

// ---- gradient suite ----

TEST(GradientSuite, AllLossesPass) {
  const auto report = run_gradient_suite(100, 4);
  EXPECT_EQ(report.cases.size(), 12u);
  EXPECT_LE(report.max_relative_error, 1e-4) << report.worst()->loss << " " << report.worst()->report.parameter;
}

}  // namespace
}  // namespace nmt::train
