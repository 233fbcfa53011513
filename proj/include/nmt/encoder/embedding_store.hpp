#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nmt/numcore/tensor.hpp"

namespace nmt::enc {

/// One row per residue, d columns; 32-bit as stored on disk.
struct EmbeddingMatrix {
  std::string id;
  num::Tensor<float> values;

  std::size_t length() const noexcept { return values.rows(); }
};

/// Per-residue embeddings keyed by sequence id, typically exported from an
/// external protein language model.
///
/// On-disk "NMEB" layout, little-endian:
///   magic "NMEB" | u32 version = 1 | u64 record count | u32 dimension d
///   per record: u16 id byte length | id UTF-8 | u32 residue count | residue count * d f32, row-major
/// Residue rows align with sequence positions; no begin/end token rows.
class EmbeddingStore {
 public:
  static constexpr std::string_view kMagic = "NMEB";
  static constexpr std::uint32_t kVersion = 1;

  explicit EmbeddingStore(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool contains(const std::string& id) const { return index_.contains(id); }

  /// MissingEmbedding when absent.
  const EmbeddingMatrix& at(const std::string& id) const;

  /// Insertion order is preserved on write. Duplicate ids or a width other
  /// than dim() are FormatErrors.
  void add(EmbeddingMatrix record);

  const std::vector<EmbeddingMatrix>& records() const noexcept { return records_; }

  std::string serialize() const;
  static EmbeddingStore deserialize(std::string_view bytes);

 private:
  std::size_t dim_;
  std::vector<EmbeddingMatrix> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

EmbeddingStore load_embedding_store(const std::filesystem::path& path);
void write_embedding_store(const std::filesystem::path& path, const EmbeddingStore& store);

}  // namespace nmt::enc
