#include <algorithm>
#include <random>

#include "nmt/error.hpp"
#include "nmt/trainer/dataset.hpp"

namespace nmt::train {

bool contains_motif(const std::string& residues, const std::string& motif) {
  return !motif.empty() && residues.find(motif) != std::string::npos;
}

namespace {

class MotifGenerator {
 public:
  MotifGenerator(const SyntheticConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

  /// Uniform background; `plant` (possibly empty) inserted at a random
  /// position. Neither motif appears anywhere else.
  std::string sequence(const std::string& plant) {
    const std::size_t len = std::uniform_int_distribution<std::size_t>(cfg_.min_len, cfg_.max_len)(rng_);
    std::uniform_int_distribution<std::size_t> residue(0, 19);
    for (;;) {
      std::string s(len, 'A');
      for (char& c : s) c = seq::kCanonicalResidues[residue(rng_)];
      if (!plant.empty()) {
        const std::size_t at = std::uniform_int_distribution<std::size_t>(0, len - plant.size())(rng_);
        s.replace(at, plant.size(), plant);
      }
      const bool has_motif = contains_motif(s, cfg_.motif);
      const bool has_partner = contains_motif(s, cfg_.partner_motif);
      const bool clean = (plant == cfg_.motif ? !has_partner : plant == cfg_.partner_motif ? !has_motif
                                                                                            : !has_motif && !has_partner);
      if (clean) return s;
    }
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  const SyntheticConfig& cfg_;
  std::mt19937_64 rng_;
};

std::vector<std::size_t> balanced_labels(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i % 2;
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

}  // namespace

Dataset make_motif_dataset(const SyntheticConfig& cfg) {
  if (cfg.min_len < std::max(cfg.motif.size(), cfg.partner_motif.size()) || cfg.min_len > cfg.max_len ||
      cfg.motif.empty() || cfg.partner_motif.empty() || cfg.motif == cfg.partner_motif) {
    fail(ErrorKind::ConfigError, "synthetic task: inconsistent lengths or motifs");
  }
  Dataset data;
  data.task = cfg.task;
  data.class_count = 2;
  MotifGenerator gen(cfg);

  auto add_sequence = [&](std::string id, const std::string& plant) {
    data.sequences.push_back(seq::tokenize(gen.sequence(plant), seq::kDefaultMaxLen, std::move(id)));
    return data.sequences.back();
  };

  const std::string none;
  auto fill = [&](Split& split, std::size_t n, const std::string& prefix) {
    const auto labels = balanced_labels(n, gen.rng());
    std::size_t negative_kind = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = prefix + std::to_string(i);
      if (cfg.task == head::TaskKind::Wise) {
        split.wise.push_back({add_sequence(id, labels[i] ? cfg.motif : none), labels[i]});
        continue;
      }
      // Carrier combinations for A and B.
      std::string a = cfg.motif, b = cfg.partner_motif;
      if (labels[i] == 0) {
        switch (negative_kind++ % 4) {
          case 0: b = none; break;
          case 1: a = none; break;
          case 2: std::swap(a, b); break;
          default: a = b = none;
        }
      }
      auto sa = add_sequence(id + "a", a);
      auto sb = add_sequence(id + "b", b);
      split.pairs.push_back({sa, sb, labels[i]});
    }
  };
  fill(data.train, cfg.train, "tr");
  fill(data.valid, cfg.valid, "va");
  fill(data.test, cfg.test, "te");
  data.index_sequences();
  return data;
}

}  // namespace nmt::train
