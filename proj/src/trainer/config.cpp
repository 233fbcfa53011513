#include "nmt/trainer/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "nmt/error.hpp"
#include "nmt/seqdata/seqdata.hpp"

namespace nmt::train {

std::string_view to_string(EncoderMode mode) {
  switch (mode) {
    case EncoderMode::Scratch: return "scratch";
    case EncoderMode::Finetune: return "finetune";
    case EncoderMode::Frozen: return "frozen";
    case EncoderMode::Store: return "store";
  }
  return "?";
}

EncoderMode parse_encoder_mode(std::string_view text) {
  for (auto m : {EncoderMode::Scratch, EncoderMode::Finetune, EncoderMode::Frozen, EncoderMode::Store}) {
    if (text == to_string(m)) return m;
  }
  fail(ErrorKind::ConfigError, "encoder_mode must be scratch, finetune, frozen or store, got '" + std::string(text) + "'");
}

head::ModelConfig TrainConfig::model_config(std::size_t store_dim) const {
  head::ModelConfig m;
  m.task = task;
  m.class_count = class_count;
  m.has_encoder = encoder_mode != EncoderMode::Store;
  m.encoder.d_model = d_model;
  m.encoder.layers = layers;
  m.encoder.heads = heads;
  m.encoder.ff = ff;
  m.encoder.out_dim = hidden;
  m.encoder.max_len = max_len;
  m.hidden = m.has_encoder ? hidden : store_dim;
  m.scale_cross = scale_cross;
  return m;
}

void TrainConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) fail(ErrorKind::ConfigError, msg);
  };
  need(batch_size >= 1, "batch_size must be at least 1");
  need(epochs >= 1, "epochs must be at least 1");
  need(learning_rate > 0 && std::isfinite(learning_rate), "learning_rate must be positive");
  need(std::isfinite(lambda) && lambda >= 0, "lambda must be a finite non-negative number");
  need(class_count >= 2, "class_count must be at least 2");
  need(task == head::TaskKind::Wise || class_count == 2, "the pair task is binary (class_count = 2)");
  need(max_len >= 1, "max_len must be at least 1");
  need(sweep_seeds >= 1, "sweep_seeds must be at least 1");
  if (encoder_mode != EncoderMode::Store) model_config().validate();
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  fail(ErrorKind::ConfigError, "config key '" + std::string(key) + "': expected " + expected + ", got '" +
                                   std::string(value) + "'");
}

std::size_t to_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  // from_chars for floating point is available in libstdc++ 11.
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v, "a number");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

std::filesystem::path to_path(std::string_view v, const std::filesystem::path& base) {
  std::filesystem::path p{std::string(v)};
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

using Setter = std::function<void(TrainConfig&, std::string_view, std::string_view, const std::filesystem::path&)>;
using Getter = std::function<std::string(const TrainConfig&)>;

struct Field {
  Setter set;
  Getter get;
};

template <typename M>
Field size_field(M TrainConfig::*member) {
  return {[member](TrainConfig& c, std::string_view k, std::string_view v, const std::filesystem::path&) {
            c.*member = static_cast<M>(to_size(k, v));
          },
          [member](const TrainConfig& c) { return std::to_string(c.*member); }};
}

Field double_field(double TrainConfig::*member) {
  return {[member](TrainConfig& c, std::string_view k, std::string_view v, const std::filesystem::path&) {
            c.*member = to_double(k, v);
          },
          [member](const TrainConfig& c) {
            std::ostringstream os;
            os.precision(17);
            os << c.*member;
            return os.str();
          }};
}

Field bool_field(bool TrainConfig::*member) {
  return {[member](TrainConfig& c, std::string_view k, std::string_view v, const std::filesystem::path&) {
            c.*member = to_bool(k, v);
          },
          [member](const TrainConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

Field path_field(std::filesystem::path TrainConfig::*member) {
  return {[member](TrainConfig& c, std::string_view, std::string_view v, const std::filesystem::path& base) {
            c.*member = to_path(v, base);
          },
          [member](const TrainConfig& c) { return (c.*member).string(); }};
}

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = {
      {"task",
       {[](TrainConfig& c, std::string_view, std::string_view v, const std::filesystem::path&) {
          c.task = head::parse_task(v);
        },
        [](const TrainConfig& c) { return std::string(head::to_string(c.task)); }}},
      {"encoder_mode",
       {[](TrainConfig& c, std::string_view, std::string_view v, const std::filesystem::path&) {
          c.encoder_mode = parse_encoder_mode(v);
        },
        [](const TrainConfig& c) { return std::string(to_string(c.encoder_mode)); }}},
      {"class_count", size_field(&TrainConfig::class_count)},
      {"batch_size", size_field(&TrainConfig::batch_size)},
      {"epochs", size_field(&TrainConfig::epochs)},
      {"learning_rate", double_field(&TrainConfig::learning_rate)},
      {"negatives", size_field(&TrainConfig::negatives)},
      {"lambda", double_field(&TrainConfig::lambda)},
      {"max_len", size_field(&TrainConfig::max_len)},
      {"seed", size_field(&TrainConfig::seed)},
      {"verification", bool_field(&TrainConfig::verification)},
      {"scale_cross", bool_field(&TrainConfig::scale_cross)},
      {"d_model", size_field(&TrainConfig::d_model)},
      {"layers", size_field(&TrainConfig::layers)},
      {"heads", size_field(&TrainConfig::heads)},
      {"ff", size_field(&TrainConfig::ff)},
      {"hidden", size_field(&TrainConfig::hidden)},
      {"sweep_seeds", size_field(&TrainConfig::sweep_seeds)},
      {"threads", size_field(&TrainConfig::threads)},
      {"data_dir", path_field(&TrainConfig::data_dir)},
      {"checkpoint", path_field(&TrainConfig::checkpoint)},
      {"pretrained", path_field(&TrainConfig::pretrained)},
      {"store", path_field(&TrainConfig::store)},
  };
  return table;
}

}  // namespace

void set_config_value(TrainConfig& config, std::string_view key, std::string_view value,
                      const std::filesystem::path& base_dir) {
  auto it = fields().find(key);
  if (it == fields().end()) fail(ErrorKind::ConfigError, "unknown config key '" + std::string(key) + "'");
  it->second.set(config, key, value, base_dir);
}

TrainConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  TrainConfig config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  for (const auto& raw : seq::split_lines(text)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::ConfigError, "config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    if (!seen.insert(key).second) fail(ErrorKind::ConfigError, "duplicate config key '" + key + "'");
    set_config_value(config, key, value, base_dir);
  }
  config.validate();
  return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::IoError, "config file not found: " + path.string());
  return parse_config(seq::read_text_file(path), path.parent_path());
}

std::string format_config(const TrainConfig& config) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(config) + "\n";
  return out;
}

}  // namespace nmt::train
