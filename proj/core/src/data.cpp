#include "jdatt/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "jdatt/image_io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace jdatt {

namespace {
constexpr double kMinBoxSide = 1e-6;

std::string frame_name(const char* prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%04d.png", prefix, index);
  return buf;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}
}  // namespace

void SimParams::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(tilt_strength) || tilt_strength < 0) throw std::invalid_argument("SimParams: tilt_strength must be >= 0");
  if (!finite(tilt_correlation_length) || tilt_correlation_length <= 0)
    throw std::invalid_argument("SimParams: tilt_correlation_length must be > 0");
  if (!finite(blur_sigma) || blur_sigma < 0) throw std::invalid_argument("SimParams: blur_sigma must be >= 0");
  if (!finite(scintillation_strength) || scintillation_strength < 0 || scintillation_strength >= 1)
    throw std::invalid_argument("SimParams: scintillation_strength must be in [0,1)");
  if (!finite(temporal_rho) || temporal_rho < 0 || temporal_rho > 1)
    throw std::invalid_argument("SimParams: temporal_rho must be in [0,1]");
}

FrameSequence FrameSequence::zeros(int t, int h, int w, int c, std::string id) {
  FrameSequence s;
  s.t = t;
  s.h = h;
  s.w = w;
  s.c = c;
  s.sequence_id = std::move(id);
  s.values.assign(static_cast<size_t>(t) * h * w * c, 0.f);
  return s;
}

Tensor FrameSequence::frame_tensor(int ti) const {
  Tensor out({c, h, w});
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at3(ci, y, x) = at(ti, ci, y, x);
  return out;
}

void FrameSequence::set_frame(int ti, const Tensor& chw) {
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) at(ti, ci, y, x) = static_cast<float>(chw.at3(ci, y, x));
}

void FrameSequence::validate() const {
  if (t < 1) throw std::invalid_argument("FrameSequence " + sequence_id + ": T must be >= 1");
  if (h < 8 || w < 8) throw std::invalid_argument("FrameSequence " + sequence_id + ": H and W must be >= 8");
  if (c != 1 && c != 3) throw std::invalid_argument("FrameSequence " + sequence_id + ": C must be 1 or 3");
  if (values.size() != static_cast<size_t>(t) * h * w * c)
    throw std::invalid_argument("FrameSequence " + sequence_id + ": storage size mismatch");
  for (float v : values)
    if (!(v >= 0.f && v <= 1.f))
      throw std::invalid_argument("FrameSequence " + sequence_id + ": value out of [0,1]");
  if (frame_rate_hint && !(*frame_rate_hint > 0))
    throw std::invalid_argument("FrameSequence " + sequence_id + ": frame_rate_hint must be positive");
}

void DetectionSet::validate(bool require_scores) const {
  if (labels.size() != boxes.size()) throw std::invalid_argument("DetectionSet: boxes/labels length mismatch");
  if (!scores.empty() && scores.size() != boxes.size())
    throw std::invalid_argument("DetectionSet: scores length mismatch");
  if (require_scores && scores.size() != boxes.size())
    throw std::invalid_argument("DetectionSet: scores required");
  for (size_t i = 0; i < boxes.size(); ++i) {
    const Box c = clip_box(boxes[i]);
    if (!(std::isfinite(c.w) && std::isfinite(c.h)) || c.w <= kMinBoxSide || c.h <= kMinBoxSide)
      throw std::invalid_argument("DetectionSet: degenerate box after clipping");
    if (labels[i] < 0) throw std::invalid_argument("DetectionSet: negative label");
  }
  for (double s : scores)
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("DetectionSet: score out of [0,1]");
}

void AnnotatedSample::validate() const {
  degraded.validate();
  clean.validate();
  sim_params.validate();
  if (degraded.t != clean.t || degraded.h != clean.h || degraded.w != clean.w || degraded.c != clean.c)
    throw std::invalid_argument("AnnotatedSample " + degraded.sequence_id + ": degraded/clean shape mismatch");
  if (static_cast<int>(ground_truth.size()) != degraded.t)
    throw std::invalid_argument("AnnotatedSample " + degraded.sequence_id + ": ground_truth length != T");
  for (const auto& gt : ground_truth) gt.validate();
}

Box clip_box(const Box& b) {
  const double x1 = std::max(0.0, b.cx - b.w / 2), y1 = std::max(0.0, b.cy - b.h / 2);
  const double x2 = std::min(1.0, b.cx + b.w / 2), y2 = std::min(1.0, b.cy + b.h / 2);
  Box out;
  out.w = std::max(0.0, x2 - x1);
  out.h = std::max(0.0, y2 - y1);
  out.cx = (x1 + x2) / 2;
  out.cy = (y1 + y2) / 2;
  return out;
}

double box_iou(const Box& a, const Box& b) {
  const double ax1 = a.cx - a.w / 2, ay1 = a.cy - a.h / 2, ax2 = a.cx + a.w / 2, ay2 = a.cy + a.h / 2;
  const double bx1 = b.cx - b.w / 2, by1 = b.cy - b.h / 2, bx2 = b.cx + b.w / 2, by2 = b.cy + b.h / 2;
  const double iw = std::max(0.0, std::min(ax2, bx2) - std::max(ax1, bx1));
  const double ih = std::max(0.0, std::min(ay2, by2) - std::max(ay1, by1));
  const double inter = iw * ih;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0 ? inter / uni : 0.0;
}

namespace {
json sim_params_to_json(const SimParams& p) {
  return json{{"tilt_strength", p.tilt_strength},
              {"tilt_correlation_length", p.tilt_correlation_length},
              {"blur_sigma", p.blur_sigma},
              {"scintillation_strength", p.scintillation_strength},
              {"temporal_rho", p.temporal_rho},
              {"seed", p.seed}};
}

SimParams sim_params_from_json(const json& j) {
  SimParams p;
  p.tilt_strength = j.at("tilt_strength").get<double>();
  p.tilt_correlation_length = j.at("tilt_correlation_length").get<double>();
  p.blur_sigma = j.at("blur_sigma").get<double>();
  p.scintillation_strength = j.at("scintillation_strength").get<double>();
  p.temporal_rho = j.at("temporal_rho").get<double>();
  p.seed = j.at("seed").get<uint64_t>();
  return p;
}

ImageBuffer frame_to_image(const FrameSequence& seq, int ti) {
  ImageBuffer img;
  img.height = seq.h;
  img.width = seq.w;
  img.channels = seq.c;
  img.values.resize(static_cast<size_t>(seq.c) * seq.h * seq.w);
  for (int c = 0; c < seq.c; ++c)
    for (int y = 0; y < seq.h; ++y)
      for (int x = 0; x < seq.w; ++x) img.at(c, y, x) = seq.at(ti, c, y, x);
  return img;
}
}  // namespace

void save_dataset(const std::vector<AnnotatedSample>& samples, const std::string& root_path, uint64_t master_seed) {
  fs::path root(root_path);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw std::runtime_error("cannot create " + root.string() + ": " + ec.message());

  for (const auto& sample : samples) {
    sample.validate();
    const fs::path dir = root / sample.degraded.sequence_id;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

    for (int ti = 0; ti < sample.degraded.t; ++ti) {
      write_png((dir / frame_name("frame", ti)).string(), frame_to_image(sample.degraded, ti));
      write_png((dir / frame_name("clean", ti)).string(), frame_to_image(sample.clean, ti));
    }

    json ann = json::array();
    for (const auto& det : sample.ground_truth) {
      json boxes = json::array();
      for (const auto& b : det.boxes) boxes.push_back(json::array({b.cx, b.cy, b.w, b.h}));
      ann.push_back(json{{"frame_index", det.frame_index}, {"boxes", boxes}, {"labels", det.labels}});
    }
    write_text_file(dir / "annotations.json", ann.dump(2) + "\n");

    json meta{{"sequence_id", sample.degraded.sequence_id},
              {"frames", sample.degraded.t},
              {"height", sample.degraded.h},
              {"width", sample.degraded.w},
              {"channels", sample.degraded.c},
              {"sim_params", sim_params_to_json(sample.sim_params)},
              {"master_seed", master_seed}};
    write_text_file(dir / "meta.json", meta.dump(2) + "\n");
  }
}

std::vector<AnnotatedSample> load_dataset(const std::string& root_path) {
  fs::path root(root_path);
  if (!fs::exists(root)) throw std::runtime_error("dataset root does not exist: " + root.string());

  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) ids.push_back(entry.path().filename().string());
  std::sort(ids.begin(), ids.end());

  std::vector<AnnotatedSample> samples;
  for (const auto& id : ids) {
    const fs::path dir = root / id;
    const fs::path ann_path = dir / "annotations.json";
    if (!fs::exists(ann_path)) throw std::runtime_error("missing annotation file: " + ann_path.string());

    int t = 0;
    while (fs::exists(dir / frame_name("frame", t))) ++t;
    if (t == 0) throw std::runtime_error("no frames found in " + dir.string());

    AnnotatedSample sample;
    for (int ti = 0; ti < t; ++ti) {
      const fs::path dpath = dir / frame_name("frame", ti);
      const fs::path cpath = dir / frame_name("clean", ti);
      if (!fs::exists(cpath)) throw std::runtime_error("missing clean frame: " + cpath.string());
      const ImageBuffer deg = read_png(dpath.string());
      const ImageBuffer cln = read_png(cpath.string());
      if (ti == 0) {
        sample.degraded = FrameSequence::zeros(t, deg.height, deg.width, deg.channels, id);
        sample.clean = FrameSequence::zeros(t, cln.height, cln.width, cln.channels, id);
      }
      if (deg.height != sample.degraded.h || deg.width != sample.degraded.w || deg.channels != sample.degraded.c)
        throw std::runtime_error("frame size mismatch: " + dpath.string());
      if (cln.height != sample.clean.h || cln.width != sample.clean.w || cln.channels != sample.clean.c)
        throw std::runtime_error("frame size mismatch: " + cpath.string());
      for (int c = 0; c < deg.channels; ++c)
        for (int y = 0; y < deg.height; ++y)
          for (int x = 0; x < deg.width; ++x) {
            sample.degraded.at(ti, c, y, x) = deg.at(c, y, x);
            sample.clean.at(ti, c, y, x) = cln.at(c, y, x);
          }
    }

    const json ann = read_json_file(ann_path);
    if (!ann.is_array() || static_cast<int>(ann.size()) != t)
      throw std::runtime_error("annotation count (" + std::to_string(ann.size()) + ") does not match frame count (" +
                               std::to_string(t) + ") in " + ann_path.string());
    for (const auto& rec : ann) {
      DetectionSet det;
      det.frame_index = rec.at("frame_index").get<int>();
      for (const auto& b : rec.at("boxes")) {
        if (!b.is_array() || b.size() != 4) throw std::runtime_error("bad box record in " + ann_path.string());
        det.boxes.push_back(Box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()});
      }
      det.labels = rec.at("labels").get<std::vector<int>>();
      try {
        det.validate();
      } catch (const std::exception& e) {
        throw std::runtime_error(std::string(e.what()) + " in " + ann_path.string());
      }
      sample.ground_truth.push_back(std::move(det));
    }

    const fs::path meta_path = dir / "meta.json";
    if (fs::exists(meta_path)) {
      const json meta = read_json_file(meta_path);
      sample.sim_params = sim_params_from_json(meta.at("sim_params"));
    }

    try {
      sample.validate();
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string(e.what()) + " under " + dir.string());
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

std::string detections_to_json(const std::vector<DetectionSet>& dets) {
  json arr = json::array();
  for (const auto& det : dets) {
    json boxes = json::array();
    for (const auto& b : det.boxes) boxes.push_back(json::array({b.cx, b.cy, b.w, b.h}));
    json rec{{"frame_index", det.frame_index}, {"boxes", boxes}, {"labels", det.labels}};
    if (!det.scores.empty()) rec["scores"] = det.scores;
    arr.push_back(rec);
  }
  return arr.dump(2) + "\n";
}

std::vector<DetectionSet> detections_from_json(const std::string& text) {
  const json arr = json::parse(text);
  std::vector<DetectionSet> out;
  for (const auto& rec : arr) {
    DetectionSet det;
    det.frame_index = rec.at("frame_index").get<int>();
    for (const auto& b : rec.at("boxes"))
      det.boxes.push_back(Box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()});
    det.labels = rec.at("labels").get<std::vector<int>>();
    if (rec.contains("scores")) det.scores = rec.at("scores").get<std::vector<double>>();
    out.push_back(std::move(det));
  }
  return out;
}

}  // namespace jdatt
