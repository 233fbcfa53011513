#include "nmt/encoder/embedding_store.hpp"

#include <fstream>
#include <limits>

#include "../common/binary_io.hpp"
#include "nmt/error.hpp"
#include "nmt/seqdata/seqdata.hpp"

namespace nmt::enc {

const EmbeddingMatrix& EmbeddingStore::at(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(ErrorKind::MissingEmbedding, "no embedding for id '" + id + "'");
  return records_[it->second];
}

void EmbeddingStore::add(EmbeddingMatrix record) {
  if (record.values.rank() != 2 || record.values.cols() != dim_) {
    fail(ErrorKind::FormatError, "embedding '" + record.id + "' has shape " + num::shape_string(record.values.shape()) +
                                     ", store dimension is " + std::to_string(dim_));
  }
  if (record.id.empty() || record.id.size() > std::numeric_limits<std::uint16_t>::max()) {
    fail(ErrorKind::FormatError, "embedding id length must be in [1, 65535]");
  }
  if (index_.contains(record.id)) fail(ErrorKind::FormatError, "duplicate embedding id '" + record.id + "'");
  index_.emplace(record.id, records_.size());
  records_.push_back(std::move(record));
}

std::string EmbeddingStore::serialize() const {
  io::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.u64(records_.size());
  w.u32(static_cast<std::uint32_t>(dim_));
  for (const auto& r : records_) {
    w.u16(static_cast<std::uint16_t>(r.id.size()));
    w.bytes(r.id);
    w.u32(static_cast<std::uint32_t>(r.values.rows()));
    for (float x : r.values.data()) w.f32(x);
  }
  return w.take();
}

EmbeddingStore EmbeddingStore::deserialize(std::string_view bytes) {
  io::ByteReader r(bytes, "embedding store");
  if (bytes.size() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    fail(ErrorKind::FormatError, "embedding store: bad magic, expected NMEB");
  }
  if (const auto version = r.u32(); version != kVersion) {
    fail(ErrorKind::FormatError, "embedding store: unsupported version " + std::to_string(version));
  }
  const std::uint64_t count = r.u64();
  const std::uint32_t dim = r.u32();
  if (dim == 0) fail(ErrorKind::FormatError, "embedding store: dimension must be positive");
  EmbeddingStore store(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint16_t id_len = r.u16();
    std::string id(r.bytes(id_len));
    const std::uint32_t rows = r.u32();
    if (rows == 0) fail(ErrorKind::FormatError, "embedding store: record '" + id + "' has no residues");
    if (static_cast<std::uint64_t>(rows) * dim * 4 > r.remaining()) {
      fail(ErrorKind::FormatError, "embedding store: truncated payload");
    }
    std::vector<float> values(static_cast<std::size_t>(rows) * dim);
    for (float& x : values) x = r.f32();
    store.add({std::move(id), num::Tensor<float>({rows, dim}, std::move(values))});
  }
  if (!r.done()) fail(ErrorKind::FormatError, "embedding store: trailing bytes after the last record");
  return store;
}

EmbeddingStore load_embedding_store(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::IoError, "embedding store not found: " + path.string());
  return EmbeddingStore::deserialize(seq::read_text_file(path));
}

void write_embedding_store(const std::filesystem::path& path, const EmbeddingStore& store) {
  const std::string bytes = store.serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::IoError, "write failed for " + path.string());
}

}  // namespace nmt::enc
