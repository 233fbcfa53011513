#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <set>

#include "nmt/encoder/embedding_store.hpp"
#include "nmt/encoder/encoder.hpp"
#include "nmt/numcore/gradcheck.hpp"
#include "nmt/numcore/ops.hpp"
#include "test_util.hpp"

namespace nmt::enc {
namespace {

using num::Tape;
using num::Tensor;

EncoderConfig toy_config() {
  EncoderConfig c;
  c.d_model = 8;
  c.layers = 1;
  c.heads = 2;
  c.ff = 12;
  c.out_dim = 6;
  c.max_len = 16;
  return c;
}

TEST(Encoder, OutputHasOneRowPerResidue) {
  auto params = init_encoder<float>(toy_config(), 1);
  Tape<float> tape;
  auto out = encode(tape, seq::tokenize("MKTAYIAK"), params, true);
  EXPECT_EQ(out.value().shape(), (num::Shape{8, 6}));
}

TEST(Encoder, DefaultDimensions) {
  EncoderConfig c;
  EXPECT_EQ(c.d_model, 64u);
  EXPECT_EQ(c.layers, 2u);
  EXPECT_EQ(c.heads, 4u);
  EXPECT_EQ(c.ff, 256u);
  EXPECT_EQ(c.out_dim, 128u);
  EXPECT_EQ(c.max_len, 550u);
  auto params = init_encoder<float>(c, 3);
  EXPECT_EQ(encode_values(seq::tokenize("ACDEFG"), params).shape(), (num::Shape{6, 128}));
}

TEST(Encoder, DeterministicForSameInputAndParams) {
  auto params = init_encoder<double>(toy_config(), 5);
  auto s = seq::tokenize("WYVKLM");
  EXPECT_EQ(encode_values(s, params), encode_values(s, params));
  auto again = init_encoder<double>(toy_config(), 5);
  EXPECT_EQ(encode_values(s, params), encode_values(s, again));
}

TEST(Encoder, SeedChangesInitialization) {
  auto a = init_encoder<double>(toy_config(), 5);
  auto b = init_encoder<double>(toy_config(), 6);
  EXPECT_NE(a.token_embedding.value, b.token_embedding.value);
}

TEST(Encoder, InitializationWithinFanInBound) {
  auto p = init_encoder<double>(toy_config(), 9);
  const double bound = 1.0 / std::sqrt(8.0);
  for (double x : p.layers[0].wq.value.data()) EXPECT_LE(std::abs(x), bound);
  for (double x : p.layers[0].ln1_gamma.value.data()) EXPECT_EQ(x, 1.0);
  for (double x : p.layers[0].ln1_beta.value.data()) EXPECT_EQ(x, 0.0);
}

TEST(Encoder, SwappingTwoResiduesChangesOutput) {
  auto params = init_encoder<double>(toy_config(), 2);
  auto ac = encode_values(seq::tokenize("AC"), params);
  auto ca = encode_values(seq::tokenize("CA"), params);
  // Without positions, the rows of "CA" would be the rows of "AC" swapped.
  bool row_permutation = true;
  for (std::size_t j = 0; j < ac.cols(); ++j) {
    row_permutation = row_permutation && ac(0, j) == ca(1, j) && ac(1, j) == ca(0, j);
  }
  EXPECT_FALSE(row_permutation);
}

TEST(Encoder, SinusoidalTable) {
  auto pe = sinusoidal_positions<double>(4, 6);
  EXPECT_DOUBLE_EQ(pe(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(pe(0, 1), 1.0);
  EXPECT_NEAR(pe(3, 2), std::sin(3.0 / std::pow(10000.0, 2.0 / 6.0)), 1e-15);
  EXPECT_NEAR(pe(3, 5), std::cos(3.0 / std::pow(10000.0, 4.0 / 6.0)), 1e-15);
}

TEST(Encoder, LengthOverflowIsShapeError) {
  auto params = init_encoder<float>(toy_config(), 1);
  Tape<float> tape;
  auto long_seq = seq::tokenize(std::string(17, 'A'), 100);
  try {
    encode(tape, long_seq, params, true);
    FAIL() << "expected ShapeError";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeError);
  }
}

TEST(Encoder, HeadsMustDivideModelWidth) {
  auto c = toy_config();
  c.heads = 3;
  EXPECT_THROW(init_encoder<float>(c, 1), Error);
}

TEST(Encoder, FrozenModeRecordsNoParameters) {
  auto params = init_encoder<double>(toy_config(), 4);
  Tape<double> tape;
  auto out = encode(tape, seq::tokenize("MKV"), params, false);
  EXPECT_EQ(tape.parameter_count(), 0u);
  EXPECT_FALSE(tape.requires_grad(out));
  auto grads = tape.backward(num::sum(out));
  EXPECT_EQ(grads.size(), 0u);
}

TEST(Encoder, TrainableModeReachesEveryParameter) {
  auto params = init_encoder<double>(toy_config(), 4);
  Tape<double> tape;
  auto out = encode(tape, seq::tokenize("MKVLA"), params, true);
  std::mt19937_64 rng(1);
  auto target = testing::random_tensor<double>(out.value().shape(), rng);
  auto grads = tape.backward(num::mse(out, target));
  for (const auto* p : params.parameters()) EXPECT_TRUE(grads.contains(*p)) << p->name;
}

TEST(Encoder, GradientMatchesFiniteDifferences) {
  auto cfg = toy_config();
  cfg.d_model = 4;
  cfg.ff = 6;
  cfg.out_dim = 3;
  auto params = init_encoder<double>(cfg, 11);
  auto s = seq::tokenize("MKVW");
  std::mt19937_64 rng(2);
  auto target = testing::random_tensor<double>({4, 3}, rng);
  auto report = num::finite_diff_check<double>(
      [&](Tape<double>& tape) { return num::mse(encode(tape, s, params, true), target); }, params.parameters(), 1e-5);
  EXPECT_LE(report.max_relative_error, 1e-4) << report.parameter << "[" << report.coordinate << "]";
}

TEST(Encoder, NamesAreUnique) {
  auto params = init_encoder<float>(toy_config(), 1);
  std::set<std::string> names;
  for (const auto* p : params.parameters()) EXPECT_TRUE(names.insert(p->name).second) << p->name;
}

TEST(Encoder, CastRoundTripPreservesValues) {
  auto f = init_encoder<float>(toy_config(), 3);
  auto back = f.cast<double>().cast<float>();
  auto a = f.parameters();
  auto b = back.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value);
}

// --- embedding store ---

EmbeddingStore two_record_store() {
  std::mt19937_64 rng(3);
  EmbeddingStore store(8);
  store.add({"p1", testing::random_tensor<float>({3, 8}, rng)});
  store.add({"p2", testing::random_tensor<float>({5, 8}, rng)});
  return store;
}

TEST(EmbeddingStore, TwoRecordsOfDimEight) {
  auto loaded = EmbeddingStore::deserialize(two_record_store().serialize());
  EXPECT_EQ(loaded.size(), 2u);
  EXPECT_EQ(loaded.dim(), 8u);
  EXPECT_EQ(loaded.at("p2").length(), 5u);
}

TEST(EmbeddingStore, HeaderLayout) {
  const std::string bytes = two_record_store().serialize();
  ASSERT_GE(bytes.size(), 20u);
  EXPECT_EQ(bytes.substr(0, 4), "NMEB");
  const unsigned char version[4] = {1, 0, 0, 0};
  EXPECT_EQ(std::memcmp(bytes.data() + 4, version, 4), 0);
  const unsigned char count[8] = {2, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(std::memcmp(bytes.data() + 8, count, 8), 0);
  const unsigned char dim[4] = {8, 0, 0, 0};
  EXPECT_EQ(std::memcmp(bytes.data() + 16, dim, 4), 0);
  // header + 2 * (u16 + 2 id bytes + u32) + 8 rows * 8 floats
  EXPECT_EQ(bytes.size(), 20u + 2 * (2 + 2 + 4) + 8 * 8 * 4);
}

TEST(EmbeddingStore, RoundTripIsBitExact) {
  auto store = two_record_store();
  auto loaded = EmbeddingStore::deserialize(store.serialize());
  for (const auto& r : store.records()) {
    const auto& l = loaded.at(r.id).values;
    ASSERT_EQ(l.shape(), r.values.shape());
    EXPECT_EQ(std::memcmp(l.data().data(), r.values.data().data(), l.size() * sizeof(float)), 0);
  }
  EXPECT_EQ(loaded.serialize(), store.serialize());
}

TEST(EmbeddingStore, FileRoundTripIsByteIdentical) {
  auto path = std::filesystem::temp_directory_path() / "nmt_encoder_test_store.nmeb";
  write_embedding_store(path, two_record_store());
  const std::string first = seq::read_text_file(path);
  write_embedding_store(path, load_embedding_store(path));
  EXPECT_EQ(seq::read_text_file(path), first);
  std::filesystem::remove(path);
}

void expect_format_error(const std::string& bytes) {
  try {
    EmbeddingStore::deserialize(bytes);
    FAIL() << "expected FormatError";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::FormatError) << e.what();
  }
}

TEST(EmbeddingStore, WrongMagicIsFormatError) {
  std::string bytes = two_record_store().serialize();
  bytes[0] = 'X';
  expect_format_error(bytes);
  expect_format_error("NM");
}

TEST(EmbeddingStore, WrongVersionIsFormatError) {
  std::string bytes = two_record_store().serialize();
  bytes[4] = 2;
  expect_format_error(bytes);
}

TEST(EmbeddingStore, TruncatedPayloadIsFormatError) {
  const std::string bytes = two_record_store().serialize();
  for (std::size_t cut : {std::size_t{10}, std::size_t{21}, bytes.size() - 1}) expect_format_error(bytes.substr(0, cut));
}

TEST(EmbeddingStore, TrailingBytesAreFormatError) { expect_format_error(two_record_store().serialize() + "x"); }

TEST(EmbeddingStore, MissingIdAtLookup) {
  auto store = two_record_store();
  try {
    store.at("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingEmbedding);
  }
}

TEST(EmbeddingStore, RejectsDuplicateIdsAndWrongWidth) {
  auto store = two_record_store();
  EXPECT_THROW(store.add({"p1", Tensor<float>({1, 8})}), Error);
  EXPECT_THROW(store.add({"p3", Tensor<float>({1, 7})}), Error);
}

TEST(EmbeddingStore, EmptyStoreRoundTrips) {
  EmbeddingStore store(4);
  auto loaded = EmbeddingStore::deserialize(store.serialize());
  EXPECT_EQ(loaded.size(), 0u);
  EXPECT_EQ(loaded.dim(), 4u);
}

TEST(EmbeddingStore, MissingFileIsIoError) {
  try {
    load_embedding_store("/nonexistent/store.nmeb");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IoError);
  }
}

}  // namespace
}  // namespace nmt::enc
