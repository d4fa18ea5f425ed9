#include "jdatt/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace jdatt::config {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

TomlValue parse_scalar(const std::string& raw, int line_no) {
  const std::string text = trim(raw);
  if (text.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty value");
  TomlValue v;
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"')
      throw ConfigError("line " + std::to_string(line_no) + ": unterminated string");
    v.type = TomlValue::Type::string;
    v.s = text.substr(1, text.size() - 2);
    return v;
  }
  if (text == "true" || text == "false") {
    v.type = TomlValue::Type::boolean;
    v.b = text == "true";
    return v;
  }
  const bool looks_float = text.find('.') != std::string::npos || text.find('e') != std::string::npos ||
                           text.find('E') != std::string::npos;
  try {
    size_t used = 0;
    if (looks_float) {
      v.type = TomlValue::Type::real;
      v.d = std::stod(text, &used);
    } else {
      v.type = TomlValue::Type::integer;
      v.i = std::stoll(text, &used);
      v.d = static_cast<double>(v.i);
    }
    if (used != text.size()) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line_no) + ": cannot parse value '" + text + "'");
  }
  return v;
}

TomlValue parse_value(const std::string& raw, int line_no) {
  const std::string text = trim(raw);
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated array");
    TomlValue v;
    v.type = TomlValue::Type::array;
    const std::string inner = text.substr(1, text.size() - 2);
    std::string item;
    bool in_string = false;
    for (char c : inner) {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        if (!trim(item).empty()) v.arr.push_back(parse_scalar(item, line_no));
        item.clear();
      } else {
        item += c;
      }
    }
    if (!trim(item).empty()) v.arr.push_back(parse_scalar(item, line_no));
    return v;
  }
  return parse_scalar(text, line_no);
}

bool valid_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

}  // namespace

TomlTable parse_toml(const std::string& text) {
  TomlTable table;
  std::string section;  // "" = top level
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
      table[section];
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty() || !std::all_of(key.begin(), key.end(), valid_key_char))
      throw ConfigError("line " + std::to_string(line_no) + ": bad key '" + key + "'");
    if (table[section].count(key)) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    table[section][key] = parse_value(line.substr(eq + 1), line_no);
  }
  return table;
}

TomlTable parse_toml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_toml(ss.str());
}

nets::ModelSpec ModelsConfig::spec_for(nets::ModelKind kind, nets::Variant variant, int num_classes) const {
  const VariantSpec* vs = nullptr;
  if (kind == nets::ModelKind::restoration) {
    switch (variant) {
      case nets::Variant::teacher: vs = &restoration_teacher; break;
      case nets::Variant::large: vs = &restoration_large; break;
      case nets::Variant::medium: vs = &restoration_medium; break;
      case nets::Variant::small: vs = &restoration_small; break;
    }
  } else {
    switch (variant) {
      case nets::Variant::teacher: vs = &detector_teacher; break;
      case nets::Variant::large: vs = &detector_large; break;
      case nets::Variant::medium: vs = &detector_medium; break;
      case nets::Variant::small: vs = &detector_small; break;
    }
  }
  nets::ModelSpec spec;
  spec.kind = kind;
  spec.variant = variant;
  spec.base_channels = vs->channels;
  spec.depth = vs->depth;
  spec.num_classes = num_classes;
  spec.window = window;
  return spec;
}

RunConfig RunConfig::defaults() { return RunConfig{}; }

namespace {

using Setter = std::function<void(RunConfig&, const TomlValue&, const std::string&)>;

int64_t as_int(const TomlValue& v, const std::string& key) {
  if (v.type != TomlValue::Type::integer) throw ConfigError("key '" + key + "' expects an integer");
  return v.i;
}

double as_real(const TomlValue& v, const std::string& key) {
  if (v.type == TomlValue::Type::integer) return static_cast<double>(v.i);
  if (v.type != TomlValue::Type::real) throw ConfigError("key '" + key + "' expects a number");
  return v.d;
}

bool as_bool(const TomlValue& v, const std::string& key) {
  if (v.type != TomlValue::Type::boolean) throw ConfigError("key '" + key + "' expects true or false");
  return v.b;
}

std::string as_string(const TomlValue& v, const std::string& key) {
  if (v.type != TomlValue::Type::string) throw ConfigError("key '" + key + "' expects a quoted string");
  return v.s;
}

std::vector<std::string> as_string_array(const TomlValue& v, const std::string& key) {
  if (v.type != TomlValue::Type::array) throw ConfigError("key '" + key + "' expects an array of strings");
  std::vector<std::string> out;
  for (const auto& item : v.arr) out.push_back(as_string(item, key));
  return out;
}

struct Schema {
  std::map<std::string, Setter> setters;
  // Tracks which sim keys were explicitly given; the preset fills the rest.
  void add(const std::string& dotted, Setter s) { setters[dotted] = s; }
};

const Schema& schema() {
  static const Schema s = [] {
    Schema sc;
    sc.add("master_seed", [](RunConfig& c, const TomlValue& v, const std::string& k) {
      c.master_seed = static_cast<uint64_t>(as_int(v, k));
    });

    sc.add("data.root", [](RunConfig& c, const TomlValue& v, const std::string& k) { c.data.root = as_string(v, k); });
    sc.add("data.train_sequences",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.data.train_sequences = static_cast<int>(as_int(v, k)); });
    sc.add("data.val_sequences",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.data.val_sequences = static_cast<int>(as_int(v, k)); });
    sc.add("data.frames",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.data.frames = static_cast<int>(as_int(v, k)); });
    sc.add("data.canvas",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.data.canvas = static_cast<int>(as_int(v, k)); });
    sc.add("data.channels",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.data.channels = static_cast<int>(as_int(v, k)); });
    sc.add("data.num_classes",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.data.num_classes = static_cast<int>(as_int(v, k)); });
    sc.add("data.num_objects_min",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.data.num_objects_min = static_cast<int>(as_int(v, k)); });
    sc.add("data.num_objects_max",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.data.num_objects_max = static_cast<int>(as_int(v, k)); });
    sc.add("data.motion_amplitude",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.data.motion_amplitude = as_real(v, k); });

    sc.add("sim.preset", [](RunConfig& c, const TomlValue& v, const std::string& k) {
      c.sim_preset = as_string(v, k);
      const SimParams base = sim::preset_params(c.sim_preset);
      // Preset sets the baseline; explicit keys applied later override it.
      c.sim.tilt_strength = base.tilt_strength;
      c.sim.tilt_correlation_length = base.tilt_correlation_length;
      c.sim.blur_sigma = base.blur_sigma;
      c.sim.scintillation_strength = base.scintillation_strength;
      c.sim.temporal_rho = base.temporal_rho;
    });
    sc.add("sim.tilt_strength",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.sim.tilt_strength = as_real(v, k); });
    sc.add("sim.tilt_correlation_length",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.sim.tilt_correlation_length = as_real(v, k); });
    sc.add("sim.blur_sigma",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.sim.blur_sigma = as_real(v, k); });
    sc.add("sim.scintillation_strength",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.sim.scintillation_strength = as_real(v, k); });
    sc.add("sim.temporal_rho",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.sim.temporal_rho = as_real(v, k); });

    auto add_variant = [&sc](const std::string& key, VariantSpec ModelsConfig::* member) {
      sc.add("models." + key + "_channels", [member](RunConfig& c, const TomlValue& v, const std::string& k) {
        (c.models.*member).channels = static_cast<int>(as_int(v, k));
      });
      sc.add("models." + key + "_depth", [member](RunConfig& c, const TomlValue& v, const std::string& k) {
        (c.models.*member).depth = static_cast<int>(as_int(v, k));
      });
    };
    sc.add("models.window",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.models.window = static_cast<int>(as_int(v, k)); });
    add_variant("restoration_teacher", &ModelsConfig::restoration_teacher);
    add_variant("restoration_large", &ModelsConfig::restoration_large);
    add_variant("restoration_medium", &ModelsConfig::restoration_medium);
    add_variant("restoration_small", &ModelsConfig::restoration_small);
    add_variant("detector_teacher", &ModelsConfig::detector_teacher);
    add_variant("detector_large", &ModelsConfig::detector_large);
    add_variant("detector_medium", &ModelsConfig::detector_medium);
    add_variant("detector_small", &ModelsConfig::detector_small);

    sc.add("losses.epsilon",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.distill.epsilon = as_real(v, k); });
    sc.add("losses.gamma",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.detection.gamma = as_real(v, k); });
    sc.add("losses.alpha",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.detection.alpha = as_real(v, k); });
    sc.add("losses.tau_kl",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.distill.tau_kl = as_real(v, k); });
    sc.add("losses.tau_cwd",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.distill.tau_cwd = as_real(v, k); });
    sc.add("losses.mask_ratio",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.distill.mask_ratio = as_real(v, k); });
    sc.add("losses.tap_tags",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.distill.tap_tags = as_string_array(v, k); });
    sc.add("losses.w_reconstruction",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.distill.w_reconstruction = as_real(v, k); });
    sc.add("losses.w_detection",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.distill.w_detection = as_real(v, k); });
    sc.add("losses.w_cwd",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.distill.w_cwd = as_real(v, k); });
    sc.add("losses.w_mgd",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.distill.w_mgd = as_real(v, k); });
    sc.add("losses.w_kl",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.distill.w_kl = as_real(v, k); });
    sc.add("losses.det_w_boxes",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.detection.w_boxes = as_real(v, k); });
    sc.add("losses.det_w_giou",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.detection.w_giou = as_real(v, k); });
    sc.add("losses.det_w_labels",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.detection.w_labels = as_real(v, k); });
    sc.add("losses.kl_positives_only",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.distill.kl_positives_only = as_bool(v, k); });

    sc.add("train.epochs",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.train.epochs = static_cast<int>(as_int(v, k)); });
    sc.add("train.teacher_epochs",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.train.teacher_epochs = static_cast<int>(as_int(v, k)); });
    sc.add("train.lr_base",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.train.lr_base = as_real(v, k); });
    sc.add("train.warmup_epochs",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.train.warmup_epochs = static_cast<int>(as_int(v, k)); });
    sc.add("train.weight_decay",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.train.weight_decay = as_real(v, k); });
    sc.add("train.batch_size",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.train.batch_size = static_cast<int>(as_int(v, k)); });
    sc.add("train.grad_accum_steps",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.train.grad_accum_steps = static_cast<int>(as_int(v, k)); });
    sc.add("train.windows_per_sequence",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.train.windows_per_sequence = static_cast<int>(as_int(v, k)); });
    sc.add("train.student_variant",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.train.student_variant = as_string(v, k); });

    sc.add("eval.score_threshold",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.eval.score_threshold = as_real(v, k); });
    sc.add("eval.nms_iou",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.eval.nms_iou = as_real(v, k); });
    sc.add("eval.max_detections",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.eval.max_detections = static_cast<int>(as_int(v, k)); });
    sc.add("eval.latency_warmup",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.eval.latency_warmup = static_cast<int>(as_int(v, k)); });
    sc.add("eval.latency_runs",
           [](RunConfig& c, const TomlValue& v, const std::string& k) { c.eval.latency_runs = static_cast<int>(as_int(v, k)); });
    return sc;
  }();
  return s;
}

void apply_table(RunConfig& cfg, const TomlTable& table) {
  // The sim preset must resolve before explicit sim keys override it.
  if (auto sit = table.find("sim"); sit != table.end()) {
    if (auto pit = sit->second.find("preset"); pit != sit->second.end())
      schema().setters.at("sim.preset")(cfg, pit->second, "sim.preset");
  }
  for (const auto& [section, entries] : table) {
    for (const auto& [key, value] : entries) {
      const std::string dotted = section.empty() ? key : section + "." + key;
      if (dotted == "sim.preset") continue;  // already applied
      const auto it = schema().setters.find(dotted);
      if (it == schema().setters.end()) throw ConfigError("unknown config key: " + dotted);
      it->second(cfg, value, dotted);
    }
  }
}

}  // namespace

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig cfg = defaults();
  cfg.sim = sim::preset_params(cfg.sim_preset);
  apply_table(cfg, parse_toml(text));
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path, bool allow_missing) {
  std::ifstream probe(path);
  if (!probe) {
    if (allow_missing) {
      RunConfig cfg = defaults();
      cfg.sim = sim::preset_params(cfg.sim_preset);
      cfg.validate();
      return cfg;
    }
    throw ConfigError("cannot open config file: " + path);
  }
  std::stringstream ss;
  ss << probe.rdbuf();
  return from_text(ss.str());
}

void RunConfig::apply_override(const std::string& dotted_key, const std::string& value) {
  const auto it = schema().setters.find(dotted_key);
  if (it == schema().setters.end()) throw ConfigError("unknown config key: " + dotted_key);
  it->second(*this, parse_value(value, 0), dotted_key);
}

void RunConfig::validate() const {
  if (data.train_sequences < 0 || data.val_sequences < 0) throw ConfigError("data: sequence counts must be >= 0");
  if (data.frames < 1) throw ConfigError("data.frames must be >= 1");
  if (data.canvas < 16 || data.canvas % nets::kDetectorStride != 0)
    throw ConfigError("data.canvas must be >= 16 and divisible by 8");
  if (data.channels != 3) throw ConfigError("data.channels: the model stack is built for 3-channel data");
  if (data.num_objects_min < 1 || data.num_objects_max > 8 || data.num_objects_min > data.num_objects_max)
    throw ConfigError("data.num_objects range must satisfy 1 <= min <= max <= 8");
  if (data.num_classes < 2 || data.num_classes > 6) throw ConfigError("data.num_classes must be in [2,6]");
  try {
    sim.validate();
    distill.validate();
    detection.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (train.epochs < 0 || train.teacher_epochs < 0) throw ConfigError("train: epochs must be >= 0");
  if (!(eval.score_threshold >= 0 && eval.score_threshold <= 1)) throw ConfigError("eval.score_threshold in [0,1]");
  if (!(eval.nms_iou > 0 && eval.nms_iou <= 1)) throw ConfigError("eval.nms_iou in (0,1]");
  if (eval.max_detections < 1) throw ConfigError("eval.max_detections must be >= 1");

  // The lightweighting ladder must shrink strictly teacher > L > M > S.
  for (const auto kind : {nets::ModelKind::restoration, nets::ModelKind::detector}) {
    int64_t prev = -1;
    for (const auto variant :
         {nets::Variant::small, nets::Variant::medium, nets::Variant::large, nets::Variant::teacher}) {
      const nets::ModelSpec spec = models.spec_for(kind, variant, data.num_classes);
      int64_t count;
      if (kind == nets::ModelKind::restoration) {
        nets::RestorationModel m(spec, 0);
        count = nets::count_parameters(m);
      } else {
        nets::DetectorModel m(spec, 0);
        count = nets::count_parameters(m);
      }
      if (count <= prev)
        throw ConfigError("models: parameter counts must strictly increase small < medium < large < teacher for " +
                          nets::to_string(kind));
      prev = count;
    }
  }
}

namespace {
std::string fmt_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  const std::string s = os.str();
  // Keep floats recognizably float-typed in the echo.
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos && s.find("inf") == std::string::npos &&
      s.find("nan") == std::string::npos)
    return s + ".0";
  return s;
}
}  // namespace

std::string RunConfig::to_toml() const {
  std::ostringstream os;
  os << "master_seed = " << master_seed << "\n\n";
  os << "[data]\n";
  os << "root = \"" << data.root << "\"\n";
  os << "train_sequences = " << data.train_sequences << "\n";
  os << "val_sequences = " << data.val_sequences << "\n";
  os << "frames = " << data.frames << "\n";
  os << "canvas = " << data.canvas << "\n";
  os << "channels = " << data.channels << "\n";
  os << "num_classes = " << data.num_classes << "\n";
  os << "num_objects_min = " << data.num_objects_min << "\n";
  os << "num_objects_max = " << data.num_objects_max << "\n";
  os << "motion_amplitude = " << fmt_real(data.motion_amplitude) << "\n\n";

  os << "[sim]\n";
  os << "preset = \"" << sim_preset << "\"\n";
  os << "tilt_strength = " << fmt_real(sim.tilt_strength) << "\n";
  os << "tilt_correlation_length = " << fmt_real(sim.tilt_correlation_length) << "\n";
  os << "blur_sigma = " << fmt_real(sim.blur_sigma) << "\n";
  os << "scintillation_strength = " << fmt_real(sim.scintillation_strength) << "\n";
  os << "temporal_rho = " << fmt_real(sim.temporal_rho) << "\n\n";

  os << "[models]\n";
  os << "window = " << models.window << "\n";
  auto emit_variant = [&os](const char* name, const VariantSpec& v) {
    os << name << "_channels = " << v.channels << "\n" << name << "_depth = " << v.depth << "\n";
  };
  emit_variant("restoration_teacher", models.restoration_teacher);
  emit_variant("restoration_large", models.restoration_large);
  emit_variant("restoration_medium", models.restoration_medium);
  emit_variant("restoration_small", models.restoration_small);
  emit_variant("detector_teacher", models.detector_teacher);
  emit_variant("detector_large", models.detector_large);
  emit_variant("detector_medium", models.detector_medium);
  emit_variant("detector_small", models.detector_small);
  os << "\n[losses]\n";
  os << "epsilon = " << fmt_real(distill.epsilon) << "\n";
  os << "gamma = " << fmt_real(detection.gamma) << "\n";
  os << "alpha = " << fmt_real(detection.alpha) << "\n";
  os << "tau_kl = " << fmt_real(distill.tau_kl) << "\n";
  os << "tau_cwd = " << fmt_real(distill.tau_cwd) << "\n";
  os << "mask_ratio = " << fmt_real(distill.mask_ratio) << "\n";
  os << "tap_tags = [";
  for (size_t i = 0; i < distill.tap_tags.size(); ++i) {
    if (i) os << ", ";
    os << "\"" << distill.tap_tags[i] << "\"";
  }
  os << "]\n";
  os << "w_reconstruction = " << fmt_real(distill.w_reconstruction) << "\n";
  os << "w_detection = " << fmt_real(distill.w_detection) << "\n";
  os << "w_cwd = " << fmt_real(distill.w_cwd) << "\n";
  os << "w_mgd = " << fmt_real(distill.w_mgd) << "\n";
  os << "w_kl = " << fmt_real(distill.w_kl) << "\n";
  os << "det_w_boxes = " << fmt_real(detection.w_boxes) << "\n";
  os << "det_w_giou = " << fmt_real(detection.w_giou) << "\n";
  os << "det_w_labels = " << fmt_real(detection.w_labels) << "\n";
  os << "kl_positives_only = " << (distill.kl_positives_only ? "true" : "false") << "\n";

  os << "\n[train]\n";
  os << "epochs = " << train.epochs << "\n";
  os << "teacher_epochs = " << train.teacher_epochs << "\n";
  os << "lr_base = " << fmt_real(train.lr_base) << "\n";
  os << "warmup_epochs = " << train.warmup_epochs << "\n";
  os << "weight_decay = " << fmt_real(train.weight_decay) << "\n";
  os << "batch_size = " << train.batch_size << "\n";
  os << "grad_accum_steps = " << train.grad_accum_steps << "\n";
  os << "windows_per_sequence = " << train.windows_per_sequence << "\n";
  os << "student_variant = \"" << train.student_variant << "\"\n";

  os << "\n[eval]\n";
  os << "score_threshold = " << fmt_real(eval.score_threshold) << "\n";
  os << "nms_iou = " << fmt_real(eval.nms_iou) << "\n";
  os << "max_detections = " << eval.max_detections << "\n";
  os << "latency_warmup = " << eval.latency_warmup << "\n";
  os << "latency_runs = " << eval.latency_runs << "\n";
  return os.str();
}

distill::TrainConfig RunConfig::train_config(distill::TrainMode mode) const {
  distill::TrainConfig t;
  t.mode = mode;
  const bool teacher = mode == distill::TrainMode::teacher_restoration || mode == distill::TrainMode::teacher_detector;
  t.epochs = teacher ? train.teacher_epochs : train.epochs;
  t.lr_base = train.lr_base;
  t.warmup_epochs = std::min(train.warmup_epochs, std::max(t.epochs - 1, 0));
  t.weight_decay = train.weight_decay;
  t.batch_size = train.batch_size;
  t.grad_accum_steps = train.grad_accum_steps;
  t.windows_per_sequence = train.windows_per_sequence;
  t.seed = master_seed;
  return t;
}

}  // namespace jdatt::config
