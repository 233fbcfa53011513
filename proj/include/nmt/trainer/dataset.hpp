#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "nmt/head/model.hpp"
#include "nmt/seqdata/seqdata.hpp"

namespace nmt::train {

/// One split of a task: protein-wise examples or protein pairs.
struct Split {
  std::vector<seq::LabeledExample> wise;
  std::vector<seq::PairExample> pairs;

  std::size_t size() const noexcept { return wise.size() + pairs.size(); }
  bool empty() const noexcept { return size() == 0; }
  std::size_t label(std::size_t i) const { return wise.empty() ? pairs[i].label : wise[i].label; }
};

struct Dataset {
  head::TaskKind task = head::TaskKind::Wise;
  std::size_t class_count = 2;
  Split train, valid, test;

  /// Every distinct sequence by id (FASTA order for loaded data).
  std::vector<seq::TokenSequence> sequences;
  const seq::TokenSequence& sequence(const std::string& id) const;

  void index_sequences();

 private:
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Reads sequences.fasta plus train.tsv, valid.tsv, test.tsv from `dir`.
/// Table rows naming an id absent from the FASTA are UnknownId errors;
/// a missing valid/test table is an empty split.
Dataset load_dataset(const std::filesystem::path& dir, head::TaskKind task, std::size_t class_count,
                     std::size_t max_len = seq::kDefaultMaxLen);

/// Writes the same layout load_dataset reads.
void write_dataset(const std::filesystem::path& dir, const Dataset& data);

/// Planted-motif benchmark. Protein-wise: class 1 carries `motif` at a
/// random position of an otherwise uniform random sequence, class 0 never
/// contains it. Pair: positive iff A carries `motif` and B carries
/// `partner_motif`; negatives cover the other carrier combinations.
struct SyntheticConfig {
  head::TaskKind task = head::TaskKind::Wise;
  std::size_t train = 160;
  std::size_t valid = 40;
  std::size_t test = 100;
  std::size_t min_len = 40;
  std::size_t max_len = 60;
  std::string motif = "WCHWC";
  std::string partner_motif = "MYFMY";
  std::uint64_t seed = 1;
};

Dataset make_motif_dataset(const SyntheticConfig& config);

/// True when `residues` contains `motif` as a contiguous substring.
bool contains_motif(const std::string& residues, const std::string& motif);

}  // namespace nmt::train
