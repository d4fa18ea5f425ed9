#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jdatt/sim_params.hpp"
#include "jdatt/tensor.hpp"

namespace jdatt {

/// A T x H x W x C video clip with values in [0,1]. Storage is frame-major
/// and channel-planar: index ((t*C + c)*H + y)*W + x.
struct FrameSequence {
  int t = 0, h = 0, w = 0, c = 0;
  std::vector<float> values;
  std::string sequence_id;
  std::optional<double> frame_rate_hint;

  static FrameSequence zeros(int t, int h, int w, int c, std::string id = "");

  float& at(int ti, int ci, int y, int x) {
    return values[(((static_cast<size_t>(ti) * c) + ci) * h + y) * w + x];
  }
  float at(int ti, int ci, int y, int x) const {
    return values[(((static_cast<size_t>(ti) * c) + ci) * h + y) * w + x];
  }

  /// One frame as a [C,H,W] double tensor (the shape network code consumes).
  Tensor frame_tensor(int ti) const;
  void set_frame(int ti, const Tensor& chw);

  void validate() const;
};

struct Box {
  double cx = 0, cy = 0, w = 0, h = 0;  // normalized center/size
};

/// Per-frame detections or ground truth. `scores` is empty for ground truth.
struct DetectionSet {
  std::vector<Box> boxes;
  std::vector<int> labels;
  std::vector<double> scores;
  int frame_index = 0;

  void validate(bool require_scores = false) const;
};

enum class TapSource { teacher, student };

/// A C x H x W activation block tagged with the layer it was taken from.
struct FeatureMap {
  Tensor values;  // [C,H,W]
  std::string layer_tag;
  TapSource source = TapSource::student;
};

/// N x K pre-softmax class scores, one row per prediction cell.
struct LogitSet {
  Tensor logits;  // [N,K]
  TapSource source = TapSource::student;
};

struct AnnotatedSample {
  FrameSequence degraded;
  FrameSequence clean;
  std::vector<DetectionSet> ground_truth;  // one per frame
  SimParams sim_params;

  void validate() const;
};

/// Clip a box to the unit square (corner-space intersection).
Box clip_box(const Box& b);
double box_iou(const Box& a, const Box& b);

/// Dataset layout under `root`, one directory per sequence:
///   <sequence_id>/frame_%04d.png   degraded frames (pipeline input)
///   <sequence_id>/clean_%04d.png   clean targets
///   <sequence_id>/annotations.json per-frame boxes and labels
///   <sequence_id>/meta.json        SimParams echo plus master seed
std::vector<AnnotatedSample> load_dataset(const std::string& root_path);
void save_dataset(const std::vector<AnnotatedSample>& samples, const std::string& root_path,
                  uint64_t master_seed = 0);

/// Detection interchange: JSON array of per-frame records
/// {frame_index, boxes, labels, scores?}.
std::string detections_to_json(const std::vector<DetectionSet>& dets);
std::vector<DetectionSet> detections_from_json(const std::string& text);

}  // namespace jdatt
