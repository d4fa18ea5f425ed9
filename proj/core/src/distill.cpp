#include "jdatt/distill.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "jdatt/rng.hpp"
#include "json.hpp"

using nlohmann::json;

namespace jdatt::distill {

using ad::Var;

std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::joint: return "joint";
    case TrainMode::separate: return "separate";
    case TrainMode::teacher_restoration: return "teacher_restoration";
    default: return "teacher_detector";
  }
}

TrainMode mode_from_string(const std::string& s) {
  if (s == "joint") return TrainMode::joint;
  if (s == "separate") return TrainMode::separate;
  if (s == "teacher_restoration") return TrainMode::teacher_restoration;
  if (s == "teacher_detector") return TrainMode::teacher_detector;
  throw std::invalid_argument("unknown train mode: " + s);
}

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
  if (warmup_epochs < 0) throw std::invalid_argument("TrainConfig: warmup_epochs must be >= 0");
  if (epochs > 0 && warmup_epochs >= epochs)
    throw std::invalid_argument("TrainConfig: warmup_epochs must be < epochs");
  if (!(lr_base > 0) || !std::isfinite(lr_base)) throw std::invalid_argument("TrainConfig: lr_base must be > 0");
  if (!(weight_decay >= 0) || !std::isfinite(weight_decay))
    throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
  if (batch_size != 1)
    throw std::invalid_argument("TrainConfig: only batch_size 1 is supported; use grad_accum_steps");
  if (grad_accum_steps < 1) throw std::invalid_argument("TrainConfig: grad_accum_steps must be >= 1");
  if (windows_per_sequence < 1) throw std::invalid_argument("TrainConfig: windows_per_sequence must be >= 1");
}

double schedule_lr(int step, int steps_per_epoch, const TrainConfig& cfg) {
  if (step < 0) throw std::invalid_argument("schedule_lr: step must be >= 0");
  const int64_t total = static_cast<int64_t>(cfg.epochs) * steps_per_epoch;
  if (total <= 0) return 0.0;
  const int64_t warm = static_cast<int64_t>(cfg.warmup_epochs) * steps_per_epoch;
  if (warm > 0 && step < warm) return cfg.lr_base * static_cast<double>(step + 1) / static_cast<double>(warm);
  const int64_t s0 = warm > 0 ? warm - 1 : 0;
  const int64_t denom = total - 1 - s0;
  if (denom <= 0) return step <= s0 ? cfg.lr_base : 0.0;
  const double progress = static_cast<double>(step - s0) / static_cast<double>(denom);
  return cfg.lr_base * 0.5 * (1.0 + std::cos(M_PI * std::min(progress, 1.0)));
}

AdamW::AdamW(std::vector<Var> params, double weight_decay, double beta1, double beta2, double eps)
    : params_(std::move(params)), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void AdamW::zero_grads() {
  for (auto& p : params_)
    if (p->grad.numel() > 0) p->grad.fill(0.0);
}

void AdamW::scale_grads(double factor) {
  for (auto& p : params_) {
    if (p->grad.numel() == 0) continue;
    for (int64_t i = 0; i < p->grad.numel(); ++i) p->grad[i] *= factor;
  }
}

void AdamW::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    const bool has_grad = p->grad.numel() > 0;
    for (int64_t i = 0; i < p->value.numel(); ++i) {
      const double g = has_grad ? p->grad[i] : 0.0;
      m_[k][i] = beta1_ * m_[k][i] + (1.0 - beta1_) * g;
      v_[k][i] = beta2_ * v_[k][i] + (1.0 - beta2_) * g * g;
      const double mhat = m_[k][i] / bc1;
      const double vhat = v_[k][i] / bc2;
      p->value[i] -= lr * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * p->value[i]);
    }
  }
}

DetectionLossParts detection_composite(const nets::DetectorForward& fwd, const DetectionSet& gt,
                                       const losses::DetectionLossConfig& cfg, int num_classes) {
  DetectionLossParts out;
  out.assignment = losses::assign_cells(gt, fwd.cells_y, fwd.cells_x, num_classes);
  const int n = out.assignment.num_cells;
  const int npos = out.assignment.num_positive();
  out.has_positives = npos > 0;

  const Var p_ce = ad::sigmoid(fwd.logits_rows);
  std::vector<double> ious(static_cast<size_t>(npos));
  for (int i = 0; i < npos; ++i) {
    const int cell = out.assignment.positive_cells[static_cast<size_t>(i)];
    const Box pred{fwd.box_cx->value[cell], fwd.box_cy->value[cell], fwd.box_w->value[cell],
                   fwd.box_h->value[cell]};
    ious[static_cast<size_t>(i)] = box_iou(pred, out.assignment.positive_boxes[static_cast<size_t>(i)]);
  }
  const Var label = losses::label_loss(p_ce, ious, out.assignment, cfg);
  out.labels = label->value[0];

  if (!out.has_positives) {
    out.total = ad::mul_scalar(label, cfg.w_labels);
    return out;
  }

  // Box losses over all cells, masked down to positives. Non-positive cells
  // get a dummy finite target and zero weight.
  Tensor tcx({n}), tcy({n}), tw({n}), th({n}), mask({n});
  tcx.fill(0.5);
  tcy.fill(0.5);
  tw.fill(0.5);
  th.fill(0.5);
  for (int i = 0; i < npos; ++i) {
    const int cell = out.assignment.positive_cells[static_cast<size_t>(i)];
    const Box& b = out.assignment.positive_boxes[static_cast<size_t>(i)];
    tcx[cell] = b.cx;
    tcy[cell] = b.cy;
    tw[cell] = b.w;
    th[cell] = b.h;
    mask[cell] = 1.0;
  }
  losses::BoxList pred{fwd.box_cx, fwd.box_cy, fwd.box_w, fwd.box_h};
  losses::BoxList target{ad::constant(tcx), ad::constant(tcy), ad::constant(tw), ad::constant(th)};
  const Var mask_v = ad::constant(mask);

  const Var giou_all = losses::giou_terms(pred, target);
  const Var giou = ad::mul_scalar(ad::sum_all(ad::mul(giou_all, mask_v)), 1.0 / npos);
  out.giou = giou->value[0];

  const Var dsum = ad::add(ad::add(ad::abs_(ad::sub(pred.cx, target.cx)), ad::abs_(ad::sub(pred.cy, target.cy))),
                           ad::add(ad::abs_(ad::sub(pred.w, target.w)), ad::abs_(ad::sub(pred.h, target.h))));
  const Var l1 = ad::mul_scalar(ad::sum_all(ad::mul(dsum, mask_v)), 0.25 / npos);
  out.boxes = l1->value[0];

  out.total = ad::add(ad::add(ad::mul_scalar(label, cfg.w_labels), ad::mul_scalar(giou, cfg.w_giou)),
                      ad::mul_scalar(l1, cfg.w_boxes));
  return out;
}

namespace {

struct MicroSample {
  int sample_index;
  int center_frame;
};

// Per-epoch training plan: windows_per_sequence random centers per sequence,
// sequences visited in dataset order. Derived purely from the config seed.
std::vector<MicroSample> epoch_plan(int num_samples, const std::vector<int>& frame_counts, const TrainConfig& cfg,
                                    int epoch) {
  Rng rng(derive_seed(cfg.seed, 0x9100 + static_cast<uint64_t>(epoch)));
  std::vector<MicroSample> plan;
  for (int s = 0; s < num_samples; ++s)
    for (int k = 0; k < cfg.windows_per_sequence; ++k)
      plan.push_back({s, static_cast<int>(rng.uniform_int(frame_counts[static_cast<size_t>(s)]))});
  return plan;
}

int plan_steps_per_epoch(int num_samples, const TrainConfig& cfg) {
  const int micros = num_samples * cfg.windows_per_sequence;
  return micros / cfg.grad_accum_steps;
}

void check_finite(double total, int step, const std::map<std::string, double>& components) {
  if (std::isfinite(total)) return;
  std::ostringstream os;
  os << "non-finite training loss at step " << step << " (";
  bool first = true;
  for (const auto& [k, v] : components) {
    if (!first) os << ", ";
    os << k << "=" << v;
    first = false;
  }
  os << ")";
  throw std::runtime_error(os.str());
}

void log_record(std::ostream* log, const LossRecord& rec) {
  if (!log) return;
  json j{{"step", rec.step}, {"epoch", rec.epoch}, {"lr", rec.lr}, {"loss_total", rec.total}};
  j["loss_components"] = rec.components;
  (*log) << j.dump() << "\n";
}

/// Shared micro-batch -> optimizer-step loop. `micro_fn` builds the loss for
/// one micro sample and returns (total Var, component values).
template <typename MicroFn>
TrainState run_training(const std::vector<AnnotatedSample>& train, const TrainConfig& cfg, AdamW& opt,
                        MicroFn&& micro_fn, std::ostream* log, int epoch_offset = 0, int step_offset = 0) {
  TrainState state;
  state.step = step_offset;
  if (train.empty() || cfg.epochs == 0) return state;

  std::vector<int> frame_counts;
  for (const auto& s : train) frame_counts.push_back(s.degraded.t);
  const int steps_per_epoch = plan_steps_per_epoch(static_cast<int>(train.size()), cfg);
  if (steps_per_epoch == 0)
    throw std::invalid_argument("training plan yields zero optimizer steps per epoch; "
                                "lower grad_accum_steps or add data");

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto plan = epoch_plan(static_cast<int>(train.size()), frame_counts, cfg, epoch_offset + epoch);
    int micro_in_step = 0;
    std::map<std::string, double> comp_acc;
    double total_acc = 0.0;
    int step_in_epoch = 0;

    for (size_t mi = 0; mi < plan.size(); ++mi) {
      if (step_in_epoch >= steps_per_epoch) break;  // drop the ragged tail
      const auto& micro = plan[mi];
      const uint64_t micro_seed =
          derive_seed(cfg.seed, 0x5EED0000ULL + static_cast<uint64_t>(epoch_offset + epoch) * 1000003ULL + mi);
      try {
        auto [total_var, components] = micro_fn(train[static_cast<size_t>(micro.sample_index)],
                                                micro.center_frame, micro_seed);
        total_acc += total_var->value[0];
        for (const auto& [k, v] : components) comp_acc[k] += v;
        ad::backward(total_var);
      } catch (const std::exception& e) {
        throw std::runtime_error("training aborted at step " + std::to_string(state.step) + " (epoch " +
                                 std::to_string(epoch_offset + epoch) + "): " + e.what());
      }
      ++micro_in_step;

      if (micro_in_step == cfg.grad_accum_steps) {
        const int step = state.step;
        const double inv = 1.0 / cfg.grad_accum_steps;
        LossRecord rec;
        rec.step = step;
        rec.epoch = epoch_offset + epoch;
        rec.total = total_acc * inv;
        for (auto& [k, v] : comp_acc) rec.components[k] = v * inv;
        check_finite(rec.total, step, rec.components);

        opt.scale_grads(inv);
        const double lr = schedule_lr(step - step_offset, steps_per_epoch, cfg);
        opt.step(lr);
        opt.zero_grads();
        rec.lr = lr;
        state.lr_current = lr;
        state.loss_history.push_back(rec);
        log_record(log, rec);

        ++state.step;
        ++step_in_epoch;
        micro_in_step = 0;
        comp_acc.clear();
        total_acc = 0.0;
      }
    }
    state.epoch = epoch_offset + epoch;
  }
  return state;
}

std::vector<Var> collect_params(const std::vector<std::pair<std::string, Var>>& entries) {
  std::vector<Var> out;
  for (const auto& [n, v] : entries) out.push_back(v);
  return out;
}

struct TapSetup {
  std::vector<std::string> rest_tags, det_tags;
  std::map<std::string, std::shared_ptr<losses::Aligner>> aligners;
  std::map<std::string, std::shared_ptr<losses::Generator>> generators;
  std::map<std::string, std::array<int, 3>> teacher_dims;  // tag -> (C,H,W)
};

TapSetup setup_taps(const std::vector<AnnotatedSample>& train, const nets::RestorationModel& teacher_r,
                    const nets::DetectorModel& teacher_d, const nets::RestorationModel& student_r,
                    const nets::DetectorModel& student_d, const losses::DistillConfig& dcfg, uint64_t seed) {
  TapSetup setup;
  for (const auto& tag : dcfg.tap_tags) {
    if (tag.rfind("rest.", 0) == 0)
      setup.rest_tags.push_back(tag);
    else if (tag.rfind("det.", 0) == 0)
      setup.det_tags.push_back(tag);
    else
      throw std::invalid_argument("unknown tap tag: " + tag);
  }
  if (train.empty()) return setup;

  // Probe tap shapes with one no-grad forward on the first sample.
  ad::NoGradGuard ng;
  const auto& sample = train.front();
  const Var win = ad::constant(nets::window_input(sample.degraded, 0, teacher_r.spec().window));
  const auto tf = teacher_r.forward(win, setup.rest_tags);
  const auto sf = student_r.forward(win, setup.rest_tags);
  const auto tdf = teacher_d.forward(tf.output, setup.det_tags);
  const auto sdf = student_d.forward(sf.output, setup.det_tags);

  int idx = 0;
  auto build = [&](const std::string& tag, const Var& s_tap, const Var& t_tap) {
    const int cs = s_tap->value.dim(0);
    const int ct = t_tap->value.dim(0);
    setup.teacher_dims[tag] = {ct, t_tap->value.dim(1), t_tap->value.dim(2)};
    setup.aligners[tag] = std::make_shared<losses::Aligner>(cs, ct, derive_seed(seed, 0xA110 + idx));
    setup.generators[tag] = std::make_shared<losses::Generator>(ct, derive_seed(seed, 0x6E40 + idx));
    ++idx;
  };
  for (const auto& tag : setup.rest_tags) build(tag, sf.taps.at(tag), tf.taps.at(tag));
  for (const auto& tag : setup.det_tags) build(tag, sdf.taps.at(tag), tdf.taps.at(tag));
  return setup;
}

struct FeatureLossTerms {
  Var cwd;  // null when unused
  Var mgd;
  double cwd_value = 0, mgd_value = 0;
};

FeatureLossTerms feature_losses(const std::vector<std::string>& tags,
                                const std::map<std::string, Var>& student_taps,
                                const std::map<std::string, Var>& teacher_taps, const TapSetup& setup,
                                const losses::DistillConfig& dcfg, uint64_t micro_seed) {
  FeatureLossTerms out;
  int tag_index = 0;
  for (const auto& tag : tags) {
    const Var& s_tap = student_taps.at(tag);
    const Var& t_tap = teacher_taps.at(tag);
    const auto& dims = setup.teacher_dims.at(tag);
    const auto& aligner = *setup.aligners.at(tag);

    if (dcfg.w_cwd > 0) {
      const Var aligned = aligner.apply(s_tap, dims[1], dims[2]);
      const Var c = losses::cwd_loss(aligned, t_tap, dcfg.tau_cwd);
      out.cwd = out.cwd ? ad::add(out.cwd, c) : c;
    }
    if (dcfg.w_mgd > 0) {
      const Var m = losses::mgd_loss(s_tap, t_tap, derive_seed(micro_seed, 0x3A5C + tag_index), dcfg.mask_ratio,
                                     *setup.generators.at(tag), aligner);
      out.mgd = out.mgd ? ad::add(out.mgd, m) : m;
    }
    ++tag_index;
  }
  if (out.cwd) out.cwd_value = out.cwd->value[0];
  if (out.mgd) out.mgd_value = out.mgd->value[0];
  return out;
}

int dataset_num_classes(const std::vector<AnnotatedSample>& train) {
  int k = 2;
  for (const auto& s : train)
    for (const auto& gt : s.ground_truth)
      for (int l : gt.labels) k = std::max(k, l + 1);
  return k;
}

}  // namespace

std::shared_ptr<nets::RestorationModel> train_restoration_teacher(const std::vector<AnnotatedSample>& train,
                                                                  const nets::ModelSpec& spec,
                                                                  const TrainConfig& cfg, double charbonnier_eps,
                                                                  TrainState* state_out, std::ostream* log_jsonl) {
  cfg.validate();
  auto model = std::make_shared<nets::RestorationModel>(spec, derive_seed(cfg.seed, 0x7EAC4));
  AdamW opt(collect_params(model->params()), cfg.weight_decay);

  auto micro = [&](const AnnotatedSample& sample, int center, uint64_t) {
    const Var win = ad::constant(nets::window_input(sample.degraded, center, spec.window));
    const auto fwd = model->forward(win);
    const Var clean = ad::constant(sample.clean.frame_tensor(center));
    const Var loss = losses::charbonnier(fwd.output, clean, charbonnier_eps);
    return std::pair<Var, std::map<std::string, double>>{loss, {{"reconstruction", loss->value[0]}}};
  };
  TrainState state = run_training(train, cfg, opt, micro, log_jsonl);
  if (state_out) *state_out = state;
  return model;
}

std::shared_ptr<nets::DetectorModel> train_detector_teacher(const std::vector<AnnotatedSample>& train,
                                                            const nets::ModelSpec& spec, const TrainConfig& cfg,
                                                            const losses::DetectionLossConfig& det_cfg,
                                                            TrainState* state_out, std::ostream* log_jsonl) {
  cfg.validate();
  auto model = std::make_shared<nets::DetectorModel>(spec, derive_seed(cfg.seed, 0x7EACD));
  AdamW opt(collect_params(model->params()), cfg.weight_decay);
  const int k = std::max(spec.num_classes, dataset_num_classes(train));
  if (k != spec.num_classes)
    throw std::invalid_argument("detector num_classes smaller than dataset labels require");

  auto micro = [&](const AnnotatedSample& sample, int center, uint64_t) {
    // Teachers learn detection on clean frames.
    const auto fwd = model->forward(ad::constant(sample.clean.frame_tensor(center)));
    const auto parts = detection_composite(fwd, sample.ground_truth[static_cast<size_t>(center)], det_cfg,
                                           spec.num_classes);
    return std::pair<Var, std::map<std::string, double>>{
        parts.total, {{"labels", parts.labels}, {"giou", parts.giou}, {"boxes", parts.boxes}}};
  };
  TrainState state = run_training(train, cfg, opt, micro, log_jsonl);
  if (state_out) *state_out = state;
  return model;
}

namespace {

DistillResult make_students(const nets::ModelSpec& sr_spec, const nets::ModelSpec& sd_spec, uint64_t seed) {
  DistillResult r;
  r.student_restorer = std::make_shared<nets::RestorationModel>(sr_spec, derive_seed(seed, 0x57BD7));
  r.student_detector = std::make_shared<nets::DetectorModel>(sd_spec, derive_seed(seed, 0x57BDD));
  return r;
}

}  // namespace

DistillResult distill_joint(const std::vector<AnnotatedSample>& train, nets::RestorationModel& teacher_restorer,
                            nets::DetectorModel& teacher_detector, const nets::ModelSpec& student_restorer_spec,
                            const nets::ModelSpec& student_detector_spec, const losses::DistillConfig& dcfg,
                            const TrainConfig& tcfg, const losses::DetectionLossConfig& det_cfg,
                            std::ostream* log_jsonl) {
  tcfg.validate();
  dcfg.validate();
  teacher_restorer.set_trainable(false);
  teacher_detector.set_trainable(false);

  DistillResult result = make_students(student_restorer_spec, student_detector_spec, tcfg.seed);
  auto& student_r = *result.student_restorer;
  auto& student_d = *result.student_detector;
  TapSetup taps = setup_taps(train, teacher_restorer, teacher_detector, student_r, student_d, dcfg, tcfg.seed);
  result.aligners = taps.aligners;
  result.generators = taps.generators;

  std::vector<Var> opt_params = collect_params(student_r.params());
  for (const auto& p : collect_params(student_d.params())) opt_params.push_back(p);
  for (const auto& [tag, a] : taps.aligners)
    for (const auto& p : collect_params(a->bag().entries())) opt_params.push_back(p);
  for (const auto& [tag, g] : taps.generators)
    for (const auto& p : collect_params(g->bag().entries())) opt_params.push_back(p);
  AdamW opt(opt_params, tcfg.weight_decay);

  const int num_classes = student_detector_spec.num_classes;
  const bool need_student_det = dcfg.w_detection > 0 || dcfg.w_kl > 0 || !taps.det_tags.empty();

  auto micro = [&](const AnnotatedSample& sample, int center, uint64_t micro_seed) {
    std::map<std::string, double> comps;
    const Var win = ad::constant(nets::window_input(sample.degraded, center, student_restorer_spec.window));
    const auto sf = student_r.forward(win, taps.rest_tags);

    nets::RestorationForward tf;
    {
      ad::NoGradGuard ng;
      tf = teacher_restorer.forward(win, taps.rest_tags);
    }

    Var total;
    auto add_term = [&total](const Var& term, double weight) {
      const Var weighted = ad::mul_scalar(term, weight);
      total = total ? ad::add(total, weighted) : weighted;
    };

    if (dcfg.w_reconstruction > 0) {
      const Var clean = ad::constant(sample.clean.frame_tensor(center));
      const Var rec = losses::charbonnier(sf.output, clean, dcfg.epsilon);
      comps["reconstruction"] = rec->value[0];
      add_term(rec, dcfg.w_reconstruction);
    }

    // Feature distillation on restorer taps.
    const auto rest_feats = feature_losses(taps.rest_tags, sf.taps, tf.taps, taps, dcfg, micro_seed);

    double cwd_total = rest_feats.cwd_value, mgd_total = rest_feats.mgd_value;
    Var cwd_var = rest_feats.cwd, mgd_var = rest_feats.mgd;

    if (need_student_det) {
      const auto sdet = student_d.forward(sf.output, taps.det_tags);
      nets::DetectorForward tdet;
      {
        ad::NoGradGuard ng;
        tdet = teacher_detector.forward(tf.output, taps.det_tags);
      }

      if (dcfg.w_detection > 0) {
        const auto parts =
            detection_composite(sdet, sample.ground_truth[static_cast<size_t>(center)], det_cfg, num_classes);
        comps["detection"] = parts.total->value[0];
        comps["det_labels"] = parts.labels;
        comps["det_giou"] = parts.giou;
        comps["det_boxes"] = parts.boxes;
        add_term(parts.total, dcfg.w_detection);
      }
      if (dcfg.w_kl > 0) {
        std::vector<double> row_mask;
        if (dcfg.kl_positives_only) {
          const auto assignment = losses::assign_cells(sample.ground_truth[static_cast<size_t>(center)],
                                                       sdet.cells_y, sdet.cells_x, num_classes);
          row_mask.assign(static_cast<size_t>(assignment.num_cells), 0.0);
          for (int cell : assignment.positive_cells) row_mask[static_cast<size_t>(cell)] = 1.0;
        }
        const Var kl = losses::kl_output_loss(tdet.logits_rows, sdet.logits_rows, dcfg.tau_kl, row_mask);
        comps["kl"] = kl->value[0];
        add_term(kl, dcfg.w_kl);
      }
      const auto det_feats = feature_losses(taps.det_tags, sdet.taps, tdet.taps, taps, dcfg, micro_seed + 1);
      if (det_feats.cwd) {
        cwd_var = cwd_var ? ad::add(cwd_var, det_feats.cwd) : det_feats.cwd;
        cwd_total += det_feats.cwd_value;
      }
      if (det_feats.mgd) {
        mgd_var = mgd_var ? ad::add(mgd_var, det_feats.mgd) : det_feats.mgd;
        mgd_total += det_feats.mgd_value;
      }
    }

    if (cwd_var) {
      comps["cwd"] = cwd_total;
      add_term(cwd_var, dcfg.w_cwd);
    }
    if (mgd_var) {
      comps["mgd"] = mgd_total;
      add_term(mgd_var, dcfg.w_mgd);
    }
    if (!total) throw std::invalid_argument("distill_joint: every loss term is disabled");
    return std::pair<Var, std::map<std::string, double>>{total, comps};
  };

  result.state = run_training(train, tcfg, opt, micro, log_jsonl);
  return result;
}

DistillResult distill_separate(const std::vector<AnnotatedSample>& train, nets::RestorationModel& teacher_restorer,
                               nets::DetectorModel& teacher_detector, const nets::ModelSpec& student_restorer_spec,
                               const nets::ModelSpec& student_detector_spec, const losses::DistillConfig& dcfg,
                               const TrainConfig& tcfg, const losses::DetectionLossConfig& det_cfg,
                               std::ostream* log_jsonl) {
  tcfg.validate();
  dcfg.validate();
  if (tcfg.epochs > 0 && tcfg.epochs < 2)
    throw std::invalid_argument("distill_separate: needs at least 2 epochs to split the budget");
  teacher_restorer.set_trainable(false);
  teacher_detector.set_trainable(false);

  DistillResult result = make_students(student_restorer_spec, student_detector_spec, tcfg.seed);
  auto& student_r = *result.student_restorer;
  auto& student_d = *result.student_detector;
  TapSetup taps = setup_taps(train, teacher_restorer, teacher_detector, student_r, student_d, dcfg, tcfg.seed);
  result.aligners = taps.aligners;
  result.generators = taps.generators;

  const int num_classes = student_detector_spec.num_classes;
  const int phase1_epochs = tcfg.epochs - tcfg.epochs / 2;
  const int phase2_epochs = tcfg.epochs / 2;

  // Phase 1: restoration student alone (reconstruction + CWD + MGD on
  // restorer taps).
  {
    TrainConfig p1 = tcfg;
    p1.epochs = phase1_epochs;
    if (p1.warmup_epochs >= p1.epochs && p1.epochs > 0) p1.warmup_epochs = 0;
    std::vector<Var> opt_params = collect_params(student_r.params());
    for (const auto& tag : taps.rest_tags) {
      for (const auto& p : collect_params(taps.aligners.at(tag)->bag().entries())) opt_params.push_back(p);
      for (const auto& p : collect_params(taps.generators.at(tag)->bag().entries())) opt_params.push_back(p);
    }
    AdamW opt(opt_params, tcfg.weight_decay);

    auto micro = [&](const AnnotatedSample& sample, int center, uint64_t micro_seed) {
      std::map<std::string, double> comps;
      const Var win = ad::constant(nets::window_input(sample.degraded, center, student_restorer_spec.window));
      const auto sf = student_r.forward(win, taps.rest_tags);
      nets::RestorationForward tf;
      {
        ad::NoGradGuard ng;
        tf = teacher_restorer.forward(win, taps.rest_tags);
      }
      Var total;
      auto add_term = [&total](const Var& term, double weight) {
        const Var weighted = ad::mul_scalar(term, weight);
        total = total ? ad::add(total, weighted) : weighted;
      };
      if (dcfg.w_reconstruction > 0) {
        const Var clean = ad::constant(sample.clean.frame_tensor(center));
        const Var rec = losses::charbonnier(sf.output, clean, dcfg.epsilon);
        comps["reconstruction"] = rec->value[0];
        add_term(rec, dcfg.w_reconstruction);
      }
      const auto feats = feature_losses(taps.rest_tags, sf.taps, tf.taps, taps, dcfg, micro_seed);
      if (feats.cwd) {
        comps["cwd"] = feats.cwd_value;
        add_term(feats.cwd, dcfg.w_cwd);
      }
      if (feats.mgd) {
        comps["mgd"] = feats.mgd_value;
        add_term(feats.mgd, dcfg.w_mgd);
      }
      if (!total) throw std::invalid_argument("distill_separate: phase 1 has no enabled loss");
      return std::pair<Var, std::map<std::string, double>>{total, comps};
    };
    result.state = run_training(train, p1, opt, micro, log_jsonl);
  }

  // Phase 2: freeze the restorer, distill the detector on its outputs.
  student_r.set_trainable(false);
  {
    TrainConfig p2 = tcfg;
    p2.epochs = phase2_epochs;
    if (p2.warmup_epochs >= p2.epochs && p2.epochs > 0) p2.warmup_epochs = 0;
    std::vector<Var> opt_params = collect_params(student_d.params());
    for (const auto& tag : taps.det_tags) {
      for (const auto& p : collect_params(taps.aligners.at(tag)->bag().entries())) opt_params.push_back(p);
      for (const auto& p : collect_params(taps.generators.at(tag)->bag().entries())) opt_params.push_back(p);
    }
    AdamW opt(opt_params, tcfg.weight_decay);

    auto micro = [&](const AnnotatedSample& sample, int center, uint64_t micro_seed) {
      std::map<std::string, double> comps;
      const Var win = ad::constant(nets::window_input(sample.degraded, center, student_restorer_spec.window));
      Var s_restored, t_restored;
      {
        ad::NoGradGuard ng;
        s_restored = student_r.forward(win).output;
        t_restored = teacher_restorer.forward(win).output;
      }
      const auto sdet = student_d.forward(s_restored, taps.det_tags);
      nets::DetectorForward tdet;
      {
        ad::NoGradGuard ng;
        tdet = teacher_detector.forward(t_restored, taps.det_tags);
      }
      Var total;
      auto add_term = [&total](const Var& term, double weight) {
        const Var weighted = ad::mul_scalar(term, weight);
        total = total ? ad::add(total, weighted) : weighted;
      };
      if (dcfg.w_detection > 0) {
        const auto parts =
            detection_composite(sdet, sample.ground_truth[static_cast<size_t>(center)], det_cfg, num_classes);
        comps["detection"] = parts.total->value[0];
        add_term(parts.total, dcfg.w_detection);
      }
      if (dcfg.w_kl > 0) {
        std::vector<double> row_mask;
        if (dcfg.kl_positives_only) {
          const auto assignment = losses::assign_cells(sample.ground_truth[static_cast<size_t>(center)],
                                                       sdet.cells_y, sdet.cells_x, num_classes);
          row_mask.assign(static_cast<size_t>(assignment.num_cells), 0.0);
          for (int cell : assignment.positive_cells) row_mask[static_cast<size_t>(cell)] = 1.0;
        }
        const Var kl = losses::kl_output_loss(tdet.logits_rows, sdet.logits_rows, dcfg.tau_kl, row_mask);
        comps["kl"] = kl->value[0];
        add_term(kl, dcfg.w_kl);
      }
      const auto feats = feature_losses(taps.det_tags, sdet.taps, tdet.taps, taps, dcfg, micro_seed);
      if (feats.cwd) {
        comps["cwd"] = feats.cwd_value;
        add_term(feats.cwd, dcfg.w_cwd);
      }
      if (feats.mgd) {
        comps["mgd"] = feats.mgd_value;
        add_term(feats.mgd, dcfg.w_mgd);
      }
      if (!total) throw std::invalid_argument("distill_separate: phase 2 has no enabled loss");
      return std::pair<Var, std::map<std::string, double>>{total, comps};
    };
    const TrainState p2_state =
        run_training(train, p2, opt, micro, log_jsonl, phase1_epochs, result.state.step);
    result.state.step = p2_state.step;
    result.state.epoch = p2_state.epoch;
    result.state.lr_current = p2_state.lr_current;
    for (const auto& rec : p2_state.loss_history) result.state.loss_history.push_back(rec);
  }
  // Leave the restorer trainable-flagged again for callers that keep
  // training; its phase-2 values are final.
  student_r.set_trainable(true);
  return result;
}

}  // namespace jdatt::distill
