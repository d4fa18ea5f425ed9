#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "jdatt/distill.hpp"
#include "jdatt/losses.hpp"
#include "jdatt/sim.hpp"

namespace jdatt::config {

/// Raised on malformed config text, unknown keys, or invalid values. The CLI
/// maps it to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Flat sectioned key-value text (TOML-compatible grammar): [section] headers,
/// `key = value` lines, strings, integers, floats, booleans, and single-line
/// homogeneous arrays. `#` starts a comment.
struct TomlValue {
  enum class Type { integer, real, boolean, string, array };
  Type type = Type::integer;
  int64_t i = 0;
  double d = 0;
  bool b = false;
  std::string s;
  std::vector<TomlValue> arr;
};

using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

TomlTable parse_toml(const std::string& text);
TomlTable parse_toml_file(const std::string& path);

struct DataConfig {
  std::string root = "data/desk";
  int train_sequences = 200;
  int val_sequences = 40;
  int frames = 4;
  int canvas = 64;
  int channels = 3;
  int num_classes = 3;
  int num_objects_min = 1;
  int num_objects_max = 3;
  double motion_amplitude = 1.0;
};

struct VariantSpec {
  int channels = 8;
  int depth = 1;
};

struct ModelsConfig {
  int window = 5;
  VariantSpec restoration_teacher{12, 2};
  VariantSpec restoration_large{10, 2};
  VariantSpec restoration_medium{8, 1};
  VariantSpec restoration_small{6, 1};
  VariantSpec detector_teacher{16, 2};
  VariantSpec detector_large{12, 2};
  VariantSpec detector_medium{10, 1};
  VariantSpec detector_small{8, 1};

  nets::ModelSpec spec_for(nets::ModelKind kind, nets::Variant variant, int num_classes) const;
};

struct TrainSection {
  int epochs = 4;
  int teacher_epochs = 6;
  double lr_base = 1e-3;  // desk-scale default; the schedule shape is the contract
  int warmup_epochs = 1;
  double weight_decay = 0.01;
  int batch_size = 1;
  int grad_accum_steps = 4;
  int windows_per_sequence = 2;
  std::string student_variant = "small";
};

struct EvalSection {
  double score_threshold = 0.05;
  double nms_iou = 0.6;
  int max_detections = 20;
  int latency_warmup = 10;
  int latency_runs = 100;
};

struct RunConfig {
  uint64_t master_seed = 1234;
  DataConfig data;
  std::string sim_preset = "medium";
  SimParams sim;  // resolved preset plus explicit overrides
  ModelsConfig models;
  losses::DistillConfig distill;
  losses::DetectionLossConfig detection;
  TrainSection train;
  EvalSection eval;

  static RunConfig defaults();
  /// Missing path with allow_missing yields defaults; unknown keys throw.
  static RunConfig from_file(const std::string& path, bool allow_missing = false);
  static RunConfig from_text(const std::string& text);

  /// Applies one `section.key=value` override (highest precedence).
  void apply_override(const std::string& dotted_key, const std::string& value);
  void validate() const;

  /// Fully-resolved echo in the same config grammar, deterministic order.
  std::string to_toml() const;

  distill::TrainConfig train_config(distill::TrainMode mode) const;
};

}  // namespace jdatt::config
