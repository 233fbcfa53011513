#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nmt/head/model.hpp"
#include "nmt/numcore/tensor.hpp"

namespace nmt::train {

/// "NMCK" checkpoint, little-endian:
///   magic "NMCK" | u32 version = 1
///   then tensors until end of file:
///   u16 name byte length | name UTF-8 | u8 rank | rank * u32 dims | f32 data, row-major
/// The model configuration travels as the rank-1 tensor "meta.config".
struct NamedTensor {
  std::string name;
  num::Tensor<float> value;
};

inline constexpr std::string_view kCheckpointMagic = "NMCK";
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_tensors(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> deserialize_tensors(std::string_view bytes);

std::string serialize_checkpoint(const head::Model<float>& model);
head::Model<float> deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const head::Model<float>& model);
/// CheckpointNotFound when the file is absent; FormatError when malformed.
head::Model<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace nmt::train
