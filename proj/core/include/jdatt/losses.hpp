#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jdatt/autodiff.hpp"
#include "jdatt/data.hpp"
#include "jdatt/params.hpp"

namespace jdatt::losses {

struct DetectionLossConfig {
  double gamma = 2.0;   // focal exponent on negatives
  double alpha = 0.25;  // target mixing exponent in t = p^alpha * IoU^(1-alpha)
  double w_boxes = 1.0, w_giou = 1.0, w_labels = 1.0;

  void validate() const;
};

struct DistillConfig {
  double tau_kl = 2.0;
  double tau_cwd = 2.0;
  double mask_ratio = 0.5;  // lambda: masked fraction, P(mask == 0)
  std::vector<std::string> tap_tags = {"rest.stage1", "rest.stage2", "det.backbone"};
  // Weighted sum over {reconstruction, detection, cwd, mgd, kl}. MGD is an
  // unnormalized sum over feature elements, hence the small default weight.
  double w_reconstruction = 1.0;
  double w_detection = 1.0;
  double w_cwd = 1.0;
  double w_mgd = 1e-5;
  double w_kl = 1.0;
  double epsilon = 1e-3;  // Charbonnier stabilizer
  bool kl_positives_only = false;

  void validate() const;
};

/// Box lists as four parallel [M] vectors, the shape the differentiable box
/// losses consume. Constants for targets, graph nodes for predictions.
struct BoxList {
  ad::Var cx, cy, w, h;

  static BoxList from_boxes(const std::vector<Box>& boxes);
  int size() const { return cx ? static_cast<int>(cx->value.numel()) : 0; }
};

/// Center-cell assignment result for one frame: the cell containing a ground
/// truth box center is positive, all other (cell, class) pairs are negative.
struct CellAssignment {
  int num_cells = 0;
  int num_classes = 0;
  std::vector<int> positive_cells;
  std::vector<int> positive_labels;
  std::vector<Box> positive_boxes;  // assigned ground truth

  int num_positive() const { return static_cast<int>(positive_cells.size()); }
};

CellAssignment assign_cells(const DetectionSet& gt, int cells_y, int cells_x, int num_classes);

/// mean(sqrt((x - y)^2 + eps^2))
ad::Var charbonnier(const ad::Var& x, const ad::Var& y, double epsilon);

/// Per-pair 1 - GIoU terms, and their mean. Throws on degenerate boxes.
ad::Var giou_terms(const BoxList& pred, const BoxList& target);
ad::Var giou_loss(const BoxList& pred, const BoxList& target);

/// Mean absolute difference over the four normalized coordinates.
/// Empty lists yield 0; `no_positives` reports that vacuous case.
ad::Var box_l1_loss(const BoxList& pred, const BoxList& target, bool* no_positives = nullptr);

/// Soft targets t = p^alpha * IoU^(1-alpha) at the current p values; zero at
/// negative (cell, class) pairs. Detached: no gradient flows through t.
Tensor label_targets(const ad::Var& p_ce, const std::vector<double>& iou_per_positive,
                     const CellAssignment& assignment, double alpha);

/// Differentiable core of the label loss with explicit constant targets.
ad::Var label_loss_fixed(const ad::Var& p_ce, const Tensor& targets, const CellAssignment& assignment,
                         const DetectionLossConfig& cfg);

/// IoU-modulated BCE over all (cell, class) pairs. `p_ce` is an [N,K] tensor
/// of probabilities; values are clamped to [1e-7, 1-1e-7] internally. The
/// target t = p^alpha * IoU^(1-alpha) is a constant (no gradient through t).
ad::Var label_loss(const ad::Var& p_ce, const std::vector<double>& iou_per_positive,
                   const CellAssignment& assignment, const DetectionLossConfig& cfg);

/// Channel-wise distillation: temperature-softened spatial softmax per
/// channel, KL(teacher || student), scaled by tau^2 / C. Inputs must already
/// be aligned to common dims.
ad::Var cwd_loss(const ad::Var& tap_s, const ad::Var& tap_t, double tau_cwd);
double cwd_loss(const FeatureMap& tap_s, const FeatureMap& tap_t, double tau_cwd);

/// 1x1 channel projection plus bilinear spatial resize. Identity-initialized
/// when channel counts match.
class Aligner {
public:
  Aligner(int c_in, int c_out, uint64_t seed);
  ad::Var apply(const ad::Var& x, int out_h, int out_w) const;
  ParamBag& bag() { return bag_; }
  const ParamBag& bag() const { return bag_; }

private:
  int c_in_, c_out_;
  ParamBag bag_;
};

/// Two-layer conv generator that reconstructs teacher features from masked
/// student features. The identity mode exists for bring-up and tests.
class Generator {
public:
  enum class Mode { conv, identity };
  Generator(int channels, uint64_t seed, Mode mode = Mode::conv);
  ad::Var apply(const ad::Var& x) const;
  ParamBag& bag() { return bag_; }
  const ParamBag& bag() const { return bag_; }
  Mode mode() const { return mode_; }

private:
  Mode mode_;
  ParamBag bag_;
};

ad::Var align_features(const ad::Var& tap_s, int c_out, int h_out, int w_out, const Aligner& aligner);

/// Masked generative distillation: sum over elements of
/// (T - G(align(S) * M))^2 with a Bernoulli spatial mask drawn from
/// mask_seed (P(0) = lambda), broadcast across channels.
ad::Var mgd_loss(const ad::Var& tap_s, const ad::Var& tap_t, uint64_t mask_seed, double lambda,
                 const Generator& generator, const Aligner& aligner);

/// tau^2 * mean over cells of KL(softmax(z_t/tau) || softmax(z_s/tau)).
/// Optional 0/1 row mask restricts the mean to selected cells.
ad::Var kl_output_loss(const ad::Var& z_t, const ad::Var& z_s, double tau,
                       const std::vector<double>& row_mask = {});
double kl_output_loss(const LogitSet& z_t, const LogitSet& z_s, double tau);

}  // namespace jdatt::losses
