#include "nmt/trainer/dataset.hpp"

#include <fstream>

#include "nmt/error.hpp"

namespace nmt::train {

const seq::TokenSequence& Dataset::sequence(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) fail(ErrorKind::UnknownId, "unknown sequence id '" + id + "'");
  return sequences[it->second];
}

void Dataset::index_sequences() {
  by_id_.clear();
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (!by_id_.emplace(sequences[i].id, i).second) {
      fail(ErrorKind::ParseError, "duplicate sequence id '" + sequences[i].id + "'");
    }
  }
}

namespace {

Split load_split(const std::filesystem::path& file, const Dataset& data, bool required) {
  Split split;
  if (!std::filesystem::exists(file)) {
    if (required) fail(ErrorKind::IoError, "missing split file " + file.string());
    return split;
  }
  const std::string text = seq::read_text_file(file);
  if (data.task == head::TaskKind::Wise) {
    for (const auto& r : seq::parse_label_table(text, data.class_count)) {
      split.wise.push_back({data.sequence(r.id), r.label});
    }
  } else {
    for (const auto& r : seq::parse_pair_table(text)) {
      split.pairs.push_back({data.sequence(r.id_a), data.sequence(r.id_b), r.label});
    }
  }
  return split;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
}

std::string table_text(const Split& split) {
  std::string out;
  for (const auto& e : split.wise) out += e.seq.id + "\t" + std::to_string(e.label) + "\n";
  for (const auto& p : split.pairs) out += p.seq_a.id + "\t" + p.seq_b.id + "\t" + std::to_string(p.label) + "\n";
  return out;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& dir, head::TaskKind task, std::size_t class_count,
                     std::size_t max_len) {
  Dataset data;
  data.task = task;
  data.class_count = class_count;
  const auto fasta = dir / "sequences.fasta";
  if (!std::filesystem::exists(fasta)) fail(ErrorKind::IoError, "missing " + fasta.string());
  for (const auto& rec : seq::parse_fasta(seq::read_text_file(fasta))) {
    data.sequences.push_back(seq::tokenize(rec.sequence, max_len, rec.id));
  }
  data.index_sequences();
  data.train = load_split(dir / "train.tsv", data, true);
  data.valid = load_split(dir / "valid.tsv", data, false);
  data.test = load_split(dir / "test.tsv", data, false);
  return data;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& data) {
  std::filesystem::create_directories(dir);
  std::string fasta;
  for (const auto& s : data.sequences) fasta += ">" + s.id + "\n" + seq::detokenize(s) + "\n";
  write_file(dir / "sequences.fasta", fasta);
  write_file(dir / "train.tsv", table_text(data.train));
  write_file(dir / "valid.tsv", table_text(data.valid));
  write_file(dir / "test.tsv", table_text(data.test));
}

}  // namespace nmt::train
