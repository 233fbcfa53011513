#include "nmt/seqdata/seqdata.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "nmt/error.hpp"

namespace nmt::seq {
namespace {

constexpr std::array<std::uint8_t, 256> build_code_table() {
  std::array<std::uint8_t, 256> table{};
  for (auto& code : table) code = kUnknown;
  for (std::size_t i = 0; i < kCanonicalResidues.size(); ++i) {
    const auto upper = static_cast<unsigned char>(kCanonicalResidues[i]);
    table[upper] = static_cast<std::uint8_t>(i + 1);
    table[upper + ('a' - 'A')] = static_cast<std::uint8_t>(i + 1);
  }
  for (std::size_t i = 0; i < kAmbiguousResidues.size(); ++i) {
    const auto upper = static_cast<unsigned char>(kAmbiguousResidues[i]);
    table[upper] = static_cast<std::uint8_t>(21 + i);
    table[upper + ('a' - 'A')] = static_cast<std::uint8_t>(21 + i);
  }
  return table;
}

constexpr auto kCodeTable = build_code_table();

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  while (true) {
    const std::size_t tab = line.find('\t');
    fields.push_back(line.substr(0, tab));
    if (tab == std::string_view::npos) break;
    line.remove_prefix(tab + 1);
  }
  return fields;
}

long long parse_integer(std::string_view field, std::size_t line_no) {
  field = trim(field);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
    fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": '" + std::string(field) + "' is not an integer");
  }
  return value;
}

}  // namespace

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const std::size_t end = text.find('\n');
    std::string_view line = text.substr(0, end);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == std::string_view::npos) break;
    text.remove_prefix(end + 1);
  }
  return lines;
}


std::uint8_t residue_code(char residue) noexcept { return kCodeTable[static_cast<unsigned char>(residue)]; }

char residue_letter(std::uint8_t code) noexcept {
  if (code == kPad) return '-';
  if (code <= kCanonicalResidues.size()) return kCanonicalResidues[code - 1];
  if (code < kUnknown) return kAmbiguousResidues[code - 21];
  return 'X';
}

TokenSequence tokenize(std::string_view raw, std::size_t max_len, std::string id) {
  if (max_len == 0) fail(ErrorKind::ConfigError, "max_len must be positive");
  TokenSequence seq{std::move(id), {}};
  for (char c : raw) {
    if (is_space(c)) continue;
    if (seq.tokens.size() == max_len) break;
    seq.tokens.push_back(residue_code(c));
  }
  if (seq.tokens.empty()) fail(ErrorKind::EmptySequence, "sequence '" + seq.id + "' has no residues");
  return seq;
}

std::string detokenize(const TokenSequence& seq) {
  std::string out;
  out.reserve(seq.length());
  for (std::uint8_t code : seq.tokens) out.push_back(residue_letter(code));
  return out;
}

std::vector<FastaRecord> parse_fasta(std::string_view text) {
  std::vector<FastaRecord> records;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (!line.empty() && line.front() == '>') {
      std::string_view header = line.substr(1);
      const auto end = std::find_if(header.begin(), header.end(), is_space);
      std::string id(header.begin(), end);
      if (id.empty()) fail(ErrorKind::MalformedFasta, "line " + std::to_string(line_no) + ": empty record id");
      records.push_back({std::move(id), {}});
      continue;
    }
    std::string_view content = trim(line);
    if (content.empty()) continue;
    if (records.empty()) {
      fail(ErrorKind::MalformedFasta, "line " + std::to_string(line_no) + ": sequence data before the first header");
    }
    records.back().sequence.append(content);
  }
  return records;
}

std::vector<LabelRecord> parse_label_table(std::string_view text, std::size_t class_count) {
  std::vector<LabelRecord> out;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2 || trim(fields[0]).empty()) {
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected 'id<TAB>label'");
    }
    const long long label = parse_integer(fields[1], line_no);
    if (label < 0 || static_cast<unsigned long long>(label) >= class_count) {
      fail(ErrorKind::LabelOutOfRange, "line " + std::to_string(line_no) + ": label " + std::to_string(label) +
                                           " outside [0, " + std::to_string(class_count) + ")");
    }
    out.push_back({std::string(trim(fields[0])), static_cast<std::size_t>(label)});
  }
  return out;
}

std::vector<PairRecord> parse_pair_table(std::string_view text) {
  std::vector<PairRecord> out;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3 || trim(fields[0]).empty() || trim(fields[1]).empty()) {
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected 'id_a<TAB>id_b<TAB>label'");
    }
    const long long label = parse_integer(fields[2], line_no);
    if (label != 0 && label != 1) {
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": pair label must be 0 or 1");
    }
    out.push_back({std::string(trim(fields[0])), std::string(trim(fields[1])), static_cast<std::size_t>(label)});
  }
  return out;
}

Batch::Batch(std::size_t rows, std::size_t width)
    : rows_(rows),
      width_(width),
      tokens_(rows * width, kPad),
      mask_(rows * width, 0),
      lengths_(rows, 0),
      ids_(rows),
      labels_(rows, 0) {}

void Batch::set_row(std::size_t row, const TokenSequence& seq) {
  const std::size_t n = std::min(seq.length(), width_);
  std::fill_n(tokens_.begin() + static_cast<std::ptrdiff_t>(row * width_), width_, kPad);
  std::fill_n(mask_.begin() + static_cast<std::ptrdiff_t>(row * width_), width_, 0);
  for (std::size_t c = 0; c < n; ++c) {
    tokens_[row * width_ + c] = seq.tokens[c];
    mask_[row * width_ + c] = 1;
  }
  lengths_[row] = n;
  ids_[row] = seq.id;
}

std::vector<bool> Batch::row_mask(std::size_t row) const {
  std::vector<bool> m(width_);
  for (std::size_t c = 0; c < width_; ++c) m[c] = mask(row, c);
  return m;
}

TokenSequence Batch::sequence(std::size_t row) const {
  const auto toks = row_tokens(row);
  return {ids_[row], std::vector<std::uint8_t>(toks.begin(), toks.end())};
}

Batch make_batch(std::span<const TokenSequence> sequences, std::span<const std::size_t> labels, std::size_t max_len) {
  if (sequences.empty()) fail(ErrorKind::ShapeError, "make_batch: empty example list");
  if (labels.size() != sequences.size()) fail(ErrorKind::ShapeError, "make_batch: label count mismatch");
  std::size_t longest = 0;
  for (const auto& s : sequences) longest = std::max(longest, s.length());
  Batch batch(sequences.size(), std::max<std::size_t>(1, std::min(max_len, longest)));
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    batch.set_row(i, sequences[i]);
    batch.set_label(i, labels[i]);
  }
  return batch;
}

Batch make_batch(std::span<const LabeledExample> examples, std::size_t max_len) {
  std::vector<TokenSequence> seqs;
  std::vector<std::size_t> labels;
  seqs.reserve(examples.size());
  for (const auto& ex : examples) {
    seqs.push_back(ex.seq);
    labels.push_back(ex.label);
  }
  return make_batch(seqs, labels, max_len);
}

PairBatch make_pair_batch(std::span<const PairExample> examples, std::size_t max_len) {
  std::vector<TokenSequence> a, b;
  std::vector<std::size_t> labels;
  for (const auto& ex : examples) {
    a.push_back(ex.seq_a);
    b.push_back(ex.seq_b);
    labels.push_back(ex.label);
  }
  return {make_batch(a, labels, max_len), make_batch(b, labels, max_len)};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace nmt::seq
