#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "jdatt/data.hpp"
#include "jdatt/losses.hpp"
#include "jdatt/nets.hpp"

namespace jdatt::distill {

enum class TrainMode { joint, separate, teacher_restoration, teacher_detector };

std::string to_string(TrainMode m);
TrainMode mode_from_string(const std::string& s);

struct TrainConfig {
  int epochs = 10;
  double lr_base = 1.5e-4;
  int warmup_epochs = 10;
  double weight_decay = 0.01;
  int batch_size = 1;       // micro-batch; effective batch = grad_accum_steps
  int grad_accum_steps = 4;
  uint64_t seed = 0;
  TrainMode mode = TrainMode::joint;
  int windows_per_sequence = 2;  // training windows sampled per sequence per epoch

  void validate() const;
};

/// Linear warm-up to lr_base over warmup_epochs, then cosine decay to zero at
/// the final optimizer step.
double schedule_lr(int step, int steps_per_epoch, const TrainConfig& cfg);

struct LossRecord {
  int step = 0;
  int epoch = 0;
  double lr = 0;
  double total = 0;
  std::map<std::string, double> components;
};

struct TrainState {
  int step = 0;
  int epoch = 0;
  double lr_current = 0;
  std::vector<LossRecord> loss_history;
};

/// Decoupled-weight-decay Adam. Callers average accumulated gradients before
/// stepping.
class AdamW {
public:
  AdamW(std::vector<ad::Var> params, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8);
  void step(double lr);
  void zero_grads();
  void scale_grads(double factor);
  const std::vector<ad::Var>& params() const { return params_; }

private:
  std::vector<ad::Var> params_;
  std::vector<Tensor> m_, v_;
  double weight_decay_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

/// Detection composite on one frame: IoU-modulated label loss over all
/// (cell,class) pairs plus GIoU and L1 on positive cells. Frames with no
/// positives contribute the label term only.
struct DetectionLossParts {
  ad::Var total;
  double labels = 0, giou = 0, boxes = 0;
  bool has_positives = false;
  losses::CellAssignment assignment;
};

DetectionLossParts detection_composite(const nets::DetectorForward& fwd, const DetectionSet& gt,
                                       const losses::DetectionLossConfig& cfg, int num_classes);

std::shared_ptr<nets::RestorationModel> train_restoration_teacher(const std::vector<AnnotatedSample>& train,
                                                                  const nets::ModelSpec& spec,
                                                                  const TrainConfig& cfg, double charbonnier_eps,
                                                                  TrainState* state_out = nullptr,
                                                                  std::ostream* log_jsonl = nullptr);

std::shared_ptr<nets::DetectorModel> train_detector_teacher(const std::vector<AnnotatedSample>& train,
                                                            const nets::ModelSpec& spec, const TrainConfig& cfg,
                                                            const losses::DetectionLossConfig& det_cfg,
                                                            TrainState* state_out = nullptr,
                                                            std::ostream* log_jsonl = nullptr);

struct DistillResult {
  TrainState state;
  std::shared_ptr<nets::RestorationModel> student_restorer;
  std::shared_ptr<nets::DetectorModel> student_detector;
  std::map<std::string, std::shared_ptr<losses::Aligner>> aligners;
  std::map<std::string, std::shared_ptr<losses::Generator>> generators;
};

/// Joint distillation: one backward pass per micro-batch updates both
/// students, so detection gradients flow through the restored frame into the
/// restorer. Teachers are frozen and run without gradient recording.
DistillResult distill_joint(const std::vector<AnnotatedSample>& train, nets::RestorationModel& teacher_restorer,
                            nets::DetectorModel& teacher_detector, const nets::ModelSpec& student_restorer_spec,
                            const nets::ModelSpec& student_detector_spec, const losses::DistillConfig& dcfg,
                            const TrainConfig& tcfg, const losses::DetectionLossConfig& det_cfg,
                            std::ostream* log_jsonl = nullptr);

/// Stage-wise baseline under the same total optimizer-step budget, split
/// evenly: phase 1 distills the restorer (reconstruction + CWD + MGD), phase
/// 2 freezes it and distills the detector (detection + KL + CWD/MGD).
DistillResult distill_separate(const std::vector<AnnotatedSample>& train, nets::RestorationModel& teacher_restorer,
                               nets::DetectorModel& teacher_detector, const nets::ModelSpec& student_restorer_spec,
                               const nets::ModelSpec& student_detector_spec, const losses::DistillConfig& dcfg,
                               const TrainConfig& tcfg, const losses::DetectionLossConfig& det_cfg,
                               std::ostream* log_jsonl = nullptr);

}  // namespace jdatt::distill
