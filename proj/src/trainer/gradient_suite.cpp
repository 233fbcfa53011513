#include "nmt/trainer/gradient_suite.hpp"

#include <random>

#include "nmt/head/head.hpp"
#include "nmt/negmine/negmine.hpp"
#include "nmt/numcore/ops.hpp"
#include "nmt/trainer/trainer.hpp"

namespace nmt::train {

using num::Parameter;
using num::Tape;
using num::Tensor;
using num::Var;

const GradientCase* GradientSuiteReport::worst() const {
  const GradientCase* w = nullptr;
  for (const auto& c : cases) {
    if (!w || c.report.max_relative_error > w->report.max_relative_error) w = &c;
  }
  return w;
}

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Tensor<double> random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor<double> t({r, c});
  for (double& x : t.data()) x = u(rng);
  return t;
}

/// At least one valid entry.
std::vector<bool> random_mask(std::size_t n, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(0.75);
  std::vector<bool> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = keep(rng);
  m[pick(rng, 0, n - 1)] = true;
  return m;
}

num::GradCheckReport check_negative(std::mt19937_64& rng) {
  const std::size_t l = pick(rng, 1, 12), m = pick(rng, 1, 12), d = pick(rng, 2, 16), dk = pick(rng, 2, 16);
  auto proj = neg::ProjectionParams<double>::init(d, dk, rng);
  Parameter<double> e_n{"e_n", random_matrix(l, d, rng)};
  Parameter<double> e_g{"e_g", random_matrix(m, d, rng)};
  const auto rows = random_mask(l, rng), cols = random_mask(m, rng);
  const bool scale = pick(rng, 0, 1) == 1;
  auto build = [&](Tape<double>& tape) {
    std::vector<neg::CrossAttention<double>> atts;
    atts.push_back(neg::cross_attention(tape.param(e_n), tape.param(e_g), proj, &rows, &cols, scale));
    return neg::negative_loss<double>(tape, atts);
  };
  std::vector<Parameter<double>*> params{&proj.key, &proj.neg_query, &e_n, &e_g};
  return num::finite_diff_check<double>(build, params);
}

num::GradCheckReport check_supervised(std::mt19937_64& rng) {
  const std::size_t m = pick(rng, 1, 12), d = pick(rng, 2, 16), dk = pick(rng, 2, 16), classes = pick(rng, 2, 5);
  auto proj = neg::ProjectionParams<double>::init(d, dk, rng);
  auto clf = head::ClassifierParams<double>::init(classes, dk, rng);
  Parameter<double> e_g{"e_g", random_matrix(m, d, rng)};
  const auto rows = random_mask(m, rng);
  const std::size_t y = pick(rng, 0, classes - 1);
  auto build = [&](Tape<double>& tape) {
    auto h = head::self_attend_pool(tape.param(e_g), proj, &rows);
    return head::classify_and_loss(h, clf, y).loss;
  };
  std::vector<Parameter<double>*> params{&proj.key, &proj.query, &proj.value, &clf.weight, &clf.bias, &e_g};
  return num::finite_diff_check<double>(build, params);
}

std::string random_residues(std::mt19937_64& rng, std::size_t len) {
  std::string s(len, 'A');
  for (char& c : s) c = seq::kCanonicalResidues[pick(rng, 0, 19)];
  return s;
}

num::GradCheckReport check_total(std::mt19937_64& rng, bool pair) {
  TrainConfig cfg;
  cfg.task = pair ? head::TaskKind::Pair : head::TaskKind::Wise;
  cfg.d_model = 8;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.ff = 16;
  cfg.hidden = 8;
  cfg.max_len = 12;
  cfg.negatives = 2;
  cfg.lambda = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
  cfg.seed = rng();
  cfg.scale_cross = pick(rng, 0, 1) == 1;

  Dataset data;
  data.task = cfg.task;
  auto add = [&](const std::string& id) {
    data.sequences.push_back(seq::tokenize(random_residues(rng, pick(rng, 2, 12)), cfg.max_len, id));
    return data.sequences.back();
  };
  const std::size_t n = 4;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % 2;
    if (pair) {
      auto a = add("a" + std::to_string(i));
      auto b = add("b" + std::to_string(i));
      data.train.pairs.push_back({a, b, label});
    } else {
      data.train.wise.push_back({add("s" + std::to_string(i)), label});
    }
  }
  data.index_sequences();

  auto model = head::init_model<double>(cfg.model_config(), cfg.seed);
  const auto source = head::EmbeddingSource<double>::from_encoder(model.encoder, true);
  const neg::NegativeSampler sampler;
  const neg::LabelIndex index = pair ? neg::LabelIndex() : neg::LabelIndex(data.train.wise);
  const std::vector<std::size_t> positions{0, 1, 2};
  const BatchPlan plan = plan_batch(cfg, data.train, positions, index, sampler, rng);
  auto build = [&](Tape<double>& tape) { return batch_loss(tape, model, source, data, data.train, plan, cfg).total; };
  auto params = model.parameters(true);
  return num::finite_diff_check<double>(build, params);
}

}  // namespace

GradientSuiteReport run_gradient_suite(std::uint64_t seed, std::size_t instances) {
  GradientSuiteReport out;
  auto record = [&](const char* loss, std::uint64_t s, num::GradCheckReport r) {
    out.max_relative_error = std::max(out.max_relative_error, r.max_relative_error);
    out.cases.push_back({loss, s, std::move(r)});
  };
  for (std::size_t i = 0; i < instances; ++i) {
    const std::uint64_t s = seed + i;
    std::mt19937_64 rng(s);
    record("L_N", s, check_negative(rng));
    record("L_S", s, check_supervised(rng));
    record("L_total", s, check_total(rng, i % 2 == 1));
  }
  return out;
}

}  // namespace nmt::train
