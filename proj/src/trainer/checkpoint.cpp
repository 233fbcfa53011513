#include "nmt/trainer/checkpoint.hpp"

#include <fstream>
#include <limits>
#include <map>

#include "../common/binary_io.hpp"
#include "nmt/error.hpp"

namespace nmt::train {

using num::Tensor;

std::string serialize_tensors(const std::vector<NamedTensor>& tensors) {
  io::ByteWriter w;
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  for (const auto& t : tensors) {
    if (t.name.empty() || t.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      fail(ErrorKind::FormatError, "checkpoint tensor name length must be in [1, 65535]");
    }
    if (t.value.rank() > std::numeric_limits<std::uint8_t>::max()) fail(ErrorKind::FormatError, "rank too large");
    w.u16(static_cast<std::uint16_t>(t.name.size()));
    w.bytes(t.name);
    w.u8(static_cast<std::uint8_t>(t.value.rank()));
    for (std::size_t d : t.value.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (float x : t.value.data()) w.f32(x);
  }
  return w.take();
}

std::vector<NamedTensor> deserialize_tensors(std::string_view bytes) {
  io::ByteReader r(bytes, "checkpoint");
  if (bytes.size() < kCheckpointMagic.size() || r.bytes(kCheckpointMagic.size()) != kCheckpointMagic) {
    fail(ErrorKind::FormatError, "checkpoint: bad magic, expected NMCK");
  }
  if (const auto v = r.u32(); v != kCheckpointVersion) {
    fail(ErrorKind::FormatError, "checkpoint: unsupported version " + std::to_string(v));
  }
  std::vector<NamedTensor> out;
  while (!r.done()) {
    NamedTensor t;
    t.name = std::string(r.bytes(r.u16()));
    const std::uint8_t rank = r.u8();
    if (rank == 0) fail(ErrorKind::FormatError, "checkpoint: tensor '" + t.name + "' has rank 0");
    num::Shape shape(rank);
    std::uint64_t count = 1;
    for (auto& d : shape) {
      d = r.u32();
      if (d == 0) fail(ErrorKind::FormatError, "checkpoint: tensor '" + t.name + "' has a zero dimension");
      count *= d;
    }
    if (count * 4 > r.remaining()) fail(ErrorKind::FormatError, "checkpoint: truncated payload");
    std::vector<float> data(count);
    for (float& x : data) x = r.f32();
    t.value = Tensor<float>(std::move(shape), std::move(data));
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

constexpr const char* kMetaName = "meta.config";

Tensor<float> encode_meta(const head::ModelConfig& c) {
  // Small integers; exact in f32.
  return Tensor<float>::vector({float(c.task == head::TaskKind::Pair), float(c.class_count), float(c.has_encoder),
                                float(c.encoder.d_model), float(c.encoder.layers), float(c.encoder.heads),
                                float(c.encoder.ff), float(c.encoder.out_dim), float(c.encoder.max_len),
                                float(c.hidden), float(c.scale_cross)});
}

head::ModelConfig decode_meta(const Tensor<float>& t) {
  if (t.rank() != 1 || t.size() != 11) fail(ErrorKind::FormatError, "checkpoint: malformed meta.config");
  auto n = [&](std::size_t i) { return static_cast<std::size_t>(t[i]); };
  head::ModelConfig c;
  c.task = t[0] != 0 ? head::TaskKind::Pair : head::TaskKind::Wise;
  c.class_count = n(1);
  c.has_encoder = t[2] != 0;
  c.encoder.d_model = n(3);
  c.encoder.layers = n(4);
  c.encoder.heads = n(5);
  c.encoder.ff = n(6);
  c.encoder.out_dim = n(7);
  c.encoder.max_len = n(8);
  c.hidden = n(9);
  c.scale_cross = t[10] != 0;
  try {
    c.validate();
  } catch (const Error& e) {
    fail(ErrorKind::FormatError, std::string("checkpoint: inconsistent configuration: ") + e.what());
  }
  return c;
}

}  // namespace

std::string serialize_checkpoint(const head::Model<float>& model) {
  std::vector<NamedTensor> tensors{{kMetaName, encode_meta(model.config)}};
  for (const auto* p : model.parameters()) tensors.push_back({p->name, p->value});
  return serialize_tensors(tensors);
}

head::Model<float> deserialize_checkpoint(std::string_view bytes) {
  auto tensors = deserialize_tensors(bytes);
  if (tensors.empty() || tensors.front().name != kMetaName) {
    fail(ErrorKind::FormatError, "checkpoint: first tensor must be meta.config");
  }
  // Built from the stored configuration, then every tensor is overwritten.
  head::Model<float> model = head::init_model<float>(decode_meta(tensors.front().value), 0);
  std::map<std::string, Tensor<float>*> slots;
  for (auto* p : model.parameters()) slots[p->name] = &p->value;
  for (std::size_t i = 1; i < tensors.size(); ++i) {
    auto it = slots.find(tensors[i].name);
    if (it == slots.end()) fail(ErrorKind::FormatError, "checkpoint: unexpected tensor '" + tensors[i].name + "'");
    if (it->second->shape() != tensors[i].value.shape()) {
      fail(ErrorKind::FormatError, "checkpoint: tensor '" + tensors[i].name + "' has shape " +
                                       num::shape_string(tensors[i].value.shape()) + ", expected " +
                                       num::shape_string(it->second->shape()));
    }
    *it->second = std::move(tensors[i].value);
    slots.erase(it);
  }
  if (!slots.empty()) fail(ErrorKind::FormatError, "checkpoint: missing tensor '" + slots.begin()->first + "'");
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const head::Model<float>& model) {
  const std::string bytes = serialize_checkpoint(model);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::IoError, "write failed for " + path.string());
}

head::Model<float> load_checkpoint(const std::filesystem::path& path) {
  if (path.empty() || !std::filesystem::is_regular_file(path)) {
    fail(ErrorKind::CheckpointNotFound, "checkpoint not found: '" + path.string() + "'");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::CheckpointNotFound, "cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace nmt::train
