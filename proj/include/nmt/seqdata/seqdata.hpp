#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nmt::seq {

/// Residue alphabet: 0 is padding, 1-20 the canonical amino acids in
/// three-letter-name order (Ala, Arg, Asn, ..., Val), 21-24 B/Z/U/O and 25 X.
inline constexpr std::uint8_t kPad = 0;
inline constexpr std::uint8_t kUnknown = 25;
inline constexpr std::size_t kVocabSize = 26;
inline constexpr std::size_t kDefaultMaxLen = 550;
inline constexpr std::string_view kCanonicalResidues = "ARNDCQEGHILKMFPSTWYV";
inline constexpr std::string_view kAmbiguousResidues = "BZUO";

std::uint8_t residue_code(char residue) noexcept;
/// Inverse of residue_code; padding maps to '-'.
char residue_letter(std::uint8_t code) noexcept;

struct TokenSequence {
  std::string id;
  std::vector<std::uint8_t> tokens;

  std::size_t length() const noexcept { return tokens.size(); }
};

struct LabeledExample {
  TokenSequence seq;
  std::size_t label = 0;
};

struct PairExample {
  TokenSequence seq_a;
  TokenSequence seq_b;
  std::size_t label = 0;
};

/// Strips whitespace, upper-cases, folds unknown characters to X and keeps
/// the first max_len residues.
TokenSequence tokenize(std::string_view raw, std::size_t max_len = kDefaultMaxLen, std::string id = {});

std::string detokenize(const TokenSequence& seq);

struct FastaRecord {
  std::string id;
  std::string sequence;
};

std::vector<FastaRecord> parse_fasta(std::string_view text);

struct LabelRecord {
  std::string id;
  std::size_t label = 0;
};

std::vector<LabelRecord> parse_label_table(std::string_view text, std::size_t class_count);

struct PairRecord {
  std::string id_a;
  std::string id_b;
  std::size_t label = 0;
};

std::vector<PairRecord> parse_pair_table(std::string_view text);

/// Padded token matrix. Row i holds example i left-aligned; mask is true
/// exactly on real residues.
class Batch {
 public:
  Batch(std::size_t rows, std::size_t width);

  std::size_t size() const noexcept { return rows_; }
  std::size_t width() const noexcept { return width_; }

  std::uint8_t token(std::size_t row, std::size_t col) const noexcept { return tokens_[row * width_ + col]; }
  bool mask(std::size_t row, std::size_t col) const noexcept { return mask_[row * width_ + col] != 0; }
  std::size_t length(std::size_t row) const noexcept { return lengths_[row]; }
  std::span<const std::uint8_t> row_tokens(std::size_t row) const noexcept {
    return {tokens_.data() + row * width_, lengths_[row]};
  }
  const std::string& id(std::size_t row) const noexcept { return ids_[row]; }

  /// Validity mask of one row as a bool vector of the full padded width.
  std::vector<bool> row_mask(std::size_t row) const;
  /// The unpadded sequence stored in a row.
  TokenSequence sequence(std::size_t row) const;

  const std::vector<std::size_t>& labels() const noexcept { return labels_; }

  void set_row(std::size_t row, const TokenSequence& seq);
  void set_label(std::size_t row, std::size_t label) { labels_[row] = label; }

 private:
  std::size_t rows_;
  std::size_t width_;
  std::vector<std::uint8_t> tokens_;
  std::vector<std::uint8_t> mask_;
  std::vector<std::size_t> lengths_;
  std::vector<std::string> ids_;
  std::vector<std::size_t> labels_;
};

Batch make_batch(std::span<const LabeledExample> examples, std::size_t max_len = kDefaultMaxLen);
Batch make_batch(std::span<const TokenSequence> sequences, std::span<const std::size_t> labels,
                 std::size_t max_len = kDefaultMaxLen);

struct PairBatch {
  Batch a;
  Batch b;
};

PairBatch make_pair_batch(std::span<const PairExample> examples, std::size_t max_len = kDefaultMaxLen);

/// Whole-file read; IoError when the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

/// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string_view> split_lines(std::string_view text);

}  // namespace nmt::seq
