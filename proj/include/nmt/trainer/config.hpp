#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "nmt/head/model.hpp"

namespace nmt::train {

enum class EncoderMode { Scratch, Finetune, Frozen, Store };

std::string_view to_string(EncoderMode mode);
EncoderMode parse_encoder_mode(std::string_view text);

/// Every field is settable from a config file under the same name.
struct TrainConfig {
  head::TaskKind task = head::TaskKind::Wise;
  std::size_t class_count = 2;
  std::size_t batch_size = 16;
  std::size_t epochs = 30;
  double learning_rate = 1e-3;
  std::size_t negatives = 4;  // N; 0 disables L_N
  double lambda = 1.0;        // weight on L_N
  EncoderMode encoder_mode = EncoderMode::Scratch;
  std::size_t max_len = 550;
  std::uint64_t seed = 0;
  bool verification = false;  // 64-bit arithmetic
  bool scale_cross = false;   // 1/sqrt(d_k) in the cross-attention logits

  std::size_t d_model = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ff = 256;
  std::size_t hidden = 128;

  std::size_t sweep_seeds = 5;
  std::size_t threads = 0;  // evaluation workers; 0 = hardware concurrency

  std::filesystem::path data_dir;
  std::filesystem::path checkpoint;  // where train writes the best model
  std::filesystem::path pretrained;  // encoder source for finetune/frozen
  std::filesystem::path store;       // embedding store for store mode

  bool encoder_trainable() const {
    return encoder_mode == EncoderMode::Scratch || encoder_mode == EncoderMode::Finetune;
  }
  bool uses_negatives() const { return negatives > 0 && lambda != 0.0; }

  /// hidden is replaced by the store dimension in store mode.
  head::ModelConfig model_config(std::size_t store_dim = 0) const;

  /// ConfigError on out-of-range values.
  void validate() const;
};

/// Parses "key = value" lines; '#' starts a comment. Unknown keys,
/// duplicate keys, malformed and out-of-range values are ConfigErrors. Relative paths are
/// resolved against `base_dir`.
TrainConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
TrainConfig load_config(const std::filesystem::path& path);

/// Applies a single key/value to `config` (same rules as parse_config).
void set_config_value(TrainConfig& config, std::string_view key, std::string_view value,
                      const std::filesystem::path& base_dir = {});

/// All keys with their current values, one "key = value" per line.
std::string format_config(const TrainConfig& config);

}  // namespace nmt::train
