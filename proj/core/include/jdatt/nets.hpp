#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "jdatt/autodiff.hpp"
#include "jdatt/checkpoint.hpp"
#include "jdatt/data.hpp"
#include "jdatt/params.hpp"

namespace jdatt::nets {

enum class ModelKind { restoration, detector };
enum class Variant { teacher, large, medium, small };

std::string to_string(ModelKind k);
std::string to_string(Variant v);
ModelKind kind_from_string(const std::string& s);
Variant variant_from_string(const std::string& s);

/// Detector backbone downsamples by 8; a decoded zero-delta box has this
/// normalized size.
constexpr int kDetectorStride = 8;
constexpr double kBaseBoxSize = 0.125;

struct ModelSpec {
  ModelKind kind = ModelKind::restoration;
  Variant variant = Variant::teacher;
  int base_channels = 16;
  int depth = 1;        // conv blocks per stage (teacher gets one extra)
  int num_classes = 3;  // detectors only
  int window = 5;       // restoration input frames

  void validate() const;
  std::string to_json() const;
  static ModelSpec from_json(const std::string& text);
};

/// Named trainable tensors. Parameter order is the creation order, which is
/// also the checkpoint order.
class Model {
public:
  virtual ~Model() = default;
  const ModelSpec& spec() const { return spec_; }
  const std::vector<std::pair<std::string, ad::Var>>& params() const { return bag_.entries(); }
  ParamBag& bag() { return bag_; }
  const ParamBag& bag() const { return bag_; }
  void set_trainable(bool trainable) { bag_.set_trainable(trainable); }
  void zero_grads() { bag_.zero_grads(); }

  Checkpoint to_checkpoint() const;
  void load_state(const Checkpoint& ckpt);

protected:
  explicit Model(ModelSpec spec) : spec_(std::move(spec)) {}

  ModelSpec spec_;
  ParamBag bag_;
};

int64_t count_parameters(const Model& model);

struct RestorationForward {
  ad::Var output;         // [C,H,W], bounded to [0,1]
  ad::Var warped_center;  // stage-1 registration result
  std::map<std::string, ad::Var> taps;
};

/// Two-stage restoration net: stage 1 predicts a per-pixel displacement
/// applied to the center frame by differentiable bilinear warping; stage 2 is
/// an encoder-decoder producing the residual correction.
/// Tap tags: "rest.stage1", "rest.stage2".
class RestorationModel : public Model {
public:
  RestorationModel(ModelSpec spec, uint64_t seed);

  /// window_input must be [window*C, H, W] with H, W even.
  RestorationForward forward(const ad::Var& window_input, const std::vector<std::string>& tap_tags = {}) const;

  static std::vector<std::string> available_taps() { return {"rest.stage1", "rest.stage2"}; }

private:
  int in_channels_ = 0;
};

struct DetectorForward {
  ad::Var logits_rows;  // [N,K], row-major over cells (y, then x)
  ad::Var box_cx, box_cy, box_w, box_h;  // [N] decoded normalized boxes
  std::map<std::string, ad::Var> taps;
  int cells_y = 0, cells_x = 0;
};

/// Single-scale anchor-free detector: strided conv backbone plus a head
/// emitting K class logits and 4 box deltas per cell. Center offsets decode
/// through a sigmoid within the cell; sizes scale kBaseBoxSize exponentially.
/// Tap tags: "det.backbone", "det.head".
class DetectorModel : public Model {
public:
  DetectorModel(ModelSpec spec, uint64_t seed);

  /// frame must be [C,H,W] with H, W divisible by kDetectorStride.
  DetectorForward forward(const ad::Var& frame, const std::vector<std::string>& tap_tags = {}) const;

  static std::vector<std::string> available_taps() { return {"det.backbone", "det.head"}; }
};

/// Stacks the five-frame window centered at `center` (replicate-padded at
/// sequence edges) into a [window*C, H, W] tensor.
Tensor window_input(const FrameSequence& seq, int center, int window);

/// Converts a detector forward pass into scored detections: per-class score
/// threshold, class-wise greedy NMS, score-sorted output.
DetectionSet decode_detections(const DetectorForward& fwd, int frame_index, double score_threshold, double nms_iou,
                               int max_detections);

/// Value-level views of a forward pass for the interchange types.
LogitSet to_logit_set(const DetectorForward& fwd, TapSource source);
FeatureMap to_feature_map(const std::string& tag, const ad::Var& tap, TapSource source);

}  // namespace jdatt::nets
