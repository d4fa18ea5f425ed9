#include <cmath>
#include <sstream>

#include "doctest.h"
#include "jdatt/distill.hpp"
#include "jdatt/rng.hpp"
#include "jdatt/sim.hpp"
#include "test_oracles.hpp"

using namespace jdatt;

namespace {
std::vector<AnnotatedSample> tiny_dataset(int sequences, uint64_t seed, int frames = 2, int canvas = 32) {
  std::vector<AnnotatedSample> out;
  for (int i = 0; i < sequences; ++i) {
    sim::SceneSpec spec;
    spec.num_objects = 2;
    spec.num_classes = 3;
    spec.canvas_h = canvas;
    spec.canvas_w = canvas;
    spec.frames = frames;
    spec.motion_amplitude = 1.0;
    auto [clean, gts] = sim::generate_scene(spec, derive_seed(seed, static_cast<uint64_t>(i)));
    clean.sequence_id = "seq_" + std::to_string(i);
    SimParams p = sim::preset_params("medium");
    p.seed = derive_seed(seed, 1000 + static_cast<uint64_t>(i));
    AnnotatedSample s;
    s.clean = clean;
    s.degraded = sim::degrade(clean, p);
    s.degraded.sequence_id = clean.sequence_id;
    s.ground_truth = gts;
    s.sim_params = p;
    out.push_back(std::move(s));
  }
  return out;
}

nets::ModelSpec rest_spec(nets::Variant v, int ch, int depth) {
  nets::ModelSpec s;
  s.kind = nets::ModelKind::restoration;
  s.variant = v;
  s.base_channels = ch;
  s.depth = depth;
  return s;
}

nets::ModelSpec det_spec(nets::Variant v, int ch, int depth, int k = 3) {
  nets::ModelSpec s;
  s.kind = nets::ModelKind::detector;
  s.variant = v;
  s.base_channels = ch;
  s.depth = depth;
  s.num_classes = k;
  return s;
}

distill::TrainConfig fast_cfg(int epochs, uint64_t seed) {
  distill::TrainConfig t;
  t.epochs = epochs;
  t.warmup_epochs = epochs > 1 ? 1 : 0;
  t.grad_accum_steps = 2;
  t.windows_per_sequence = 1;
  t.seed = seed;
  t.lr_base = 1e-3;
  return t;
}

std::vector<double> snapshot(const nets::Model& m) {
  std::vector<double> out;
  for (const auto& [n, p] : m.params())
    for (int64_t i = 0; i < p->value.numel(); ++i) out.push_back(p->value[i]);
  return out;
}
}  // namespace

TEST_SUITE("distill") {

TEST_CASE("learning-rate schedule frozen points") {
  distill::TrainConfig cfg;
  cfg.epochs = 100;
  cfg.warmup_epochs = 10;
  cfg.lr_base = 1.5e-4;
  const int spe = 10;  // steps per epoch -> warmup 100 steps, total 1000

  // end of warm-up hits lr_base exactly
  CHECK(distill::schedule_lr(99, spe, cfg) == doctest::Approx(1.5e-4).epsilon(1e-15));
  // first step is lr_base / warmup_steps
  CHECK(distill::schedule_lr(0, spe, cfg) == doctest::Approx(1.5e-6).epsilon(1e-12));
  // final step decays to zero
  CHECK(distill::schedule_lr(999, spe, cfg) == doctest::Approx(0.0).epsilon(1e-18));
  // midpoint of the decay: half of base times (1 + cos(pi/2)) / ... = 0.75e-4
  const int mid = 99 + (999 - 99) / 2;
  CHECK(distill::schedule_lr(mid, spe, cfg) == doctest::Approx(0.75e-4).epsilon(1e-9));
  // monotone decay after warm-up
  for (int s = 100; s < 999; s += 50)
    CHECK(distill::schedule_lr(s + 1, spe, cfg) <= distill::schedule_lr(s, spe, cfg));
}

TEST_CASE("train config validation") {
  distill::TrainConfig bad;
  bad.epochs = 5;
  bad.warmup_epochs = 10;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.warmup_epochs = 1;
  bad.batch_size = 2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("AdamW moves parameters against the gradient and decays weights") {
  auto p = ad::make_param(Tensor({2}, {1.0, -1.0}));
  distill::AdamW opt({p}, 0.0);
  p->ensure_grad();
  p->grad[0] = 1.0;
  p->grad[1] = -1.0;
  opt.step(0.1);
  CHECK(p->value[0] < 1.0);
  CHECK(p->value[1] > -1.0);

  auto q = ad::make_param(Tensor({1}, {2.0}));
  distill::AdamW wd({q}, 0.5);
  wd.step(0.1);  // zero gradient: pure decoupled decay
  CHECK(q->value[0] == doctest::Approx(2.0 - 0.1 * 0.5 * 2.0).epsilon(1e-12));
}

TEST_CASE("zero epochs leaves the model at initialization") {
  const auto data = tiny_dataset(2, 1);
  auto cfg = fast_cfg(0, 7);
  auto model = distill::train_restoration_teacher(data, rest_spec(nets::Variant::teacher, 4, 1), cfg, 1e-3);
  nets::RestorationModel fresh(rest_spec(nets::Variant::teacher, 4, 1), derive_seed(7, 0x7EAC4));
  CHECK(snapshot(*model) == snapshot(fresh));
}

TEST_CASE("teacher training is deterministic across runs") {
  const auto data = tiny_dataset(3, 2);
  auto cfg = fast_cfg(2, 11);
  distill::TrainState s1, s2;
  auto m1 = distill::train_restoration_teacher(data, rest_spec(nets::Variant::teacher, 4, 1), cfg, 1e-3, &s1);
  auto m2 = distill::train_restoration_teacher(data, rest_spec(nets::Variant::teacher, 4, 1), cfg, 1e-3, &s2);
  CHECK(snapshot(*m1) == snapshot(*m2));
  REQUIRE(s1.loss_history.size() == s2.loss_history.size());
  for (size_t i = 0; i < s1.loss_history.size(); ++i)
    CHECK(s1.loss_history[i].total == s2.loss_history[i].total);
  CHECK(s1.loss_history.size() > 0);
}

TEST_CASE("lr_current equals schedule_lr at every logged step") {
  const auto data = tiny_dataset(4, 3);
  auto cfg = fast_cfg(2, 13);
  distill::TrainState state;
  distill::train_restoration_teacher(data, rest_spec(nets::Variant::teacher, 4, 1), cfg, 1e-3, &state);
  const int spe = static_cast<int>(data.size()) * cfg.windows_per_sequence / cfg.grad_accum_steps;
  for (const auto& rec : state.loss_history) CHECK(rec.lr == distill::schedule_lr(rec.step, spe, cfg));
}

TEST_CASE("detector teacher trains and logs components") {
  const auto data = tiny_dataset(3, 4);
  auto cfg = fast_cfg(1, 17);
  distill::TrainState state;
  std::ostringstream log;
  auto model = distill::train_detector_teacher(data, det_spec(nets::Variant::teacher, 4, 1), cfg, {}, &state, &log);
  CHECK(state.loss_history.size() > 0);
  CHECK(state.loss_history.back().components.count("labels") == 1);
  CHECK(log.str().find("loss_total") != std::string::npos);
}

TEST_CASE("joint distillation: frozen teachers, determinism, gradient flow") {
  const auto data = tiny_dataset(4, 5);
  nets::RestorationModel teacher_r(rest_spec(nets::Variant::teacher, 6, 1), 100);
  nets::DetectorModel teacher_d(det_spec(nets::Variant::teacher, 8, 1), 101);
  const auto tr_before = snapshot(teacher_r);
  const auto td_before = snapshot(teacher_d);

  losses::DistillConfig dcfg;
  dcfg.tap_tags = {"rest.stage2", "det.backbone"};
  auto cfg = fast_cfg(2, 19);

  auto r1 = distill::distill_joint(data, teacher_r, teacher_d, rest_spec(nets::Variant::small, 4, 1),
                                   det_spec(nets::Variant::small, 4, 1), dcfg, cfg, {});
  CHECK(snapshot(teacher_r) == tr_before);
  CHECK(snapshot(teacher_d) == td_before);
  CHECK(r1.state.loss_history.size() > 0);
  const auto& comps = r1.state.loss_history.back().components;
  CHECK(comps.count("reconstruction") == 1);
  CHECK(comps.count("detection") == 1);
  CHECK(comps.count("cwd") == 1);
  CHECK(comps.count("mgd") == 1);
  CHECK(comps.count("kl") == 1);

  auto r2 = distill::distill_joint(data, teacher_r, teacher_d, rest_spec(nets::Variant::small, 4, 1),
                                   det_spec(nets::Variant::small, 4, 1), dcfg, cfg, {});
  CHECK(snapshot(*r1.student_restorer) == snapshot(*r2.student_restorer));
  CHECK(snapshot(*r1.student_detector) == snapshot(*r2.student_detector));
}

TEST_CASE("detection gradients reach the restoration student in joint mode") {
  const auto data = tiny_dataset(1, 6);
  nets::RestorationModel teacher_r(rest_spec(nets::Variant::teacher, 6, 1), 102);
  nets::DetectorModel teacher_d(det_spec(nets::Variant::teacher, 8, 1), 103);
  teacher_r.set_trainable(false);
  teacher_d.set_trainable(false);

  nets::RestorationModel student_r(rest_spec(nets::Variant::small, 4, 1), 104);
  nets::DetectorModel student_d(det_spec(nets::Variant::small, 4, 1), 105);

  const auto win = ad::constant(nets::window_input(data[0].degraded, 0, 5));
  const auto sf = student_r.forward(win);
  const auto sdet = student_d.forward(sf.output);
  const auto parts = distill::detection_composite(sdet, data[0].ground_truth[0], {}, 3);
  ad::backward(parts.total);

  bool any_restorer_grad = false;
  for (const auto& [n, p] : student_r.params())
    if (p->grad.numel() > 0)
      for (int64_t i = 0; i < p->grad.numel(); ++i)
        if (p->grad[i] != 0.0) any_restorer_grad = true;
  CHECK(any_restorer_grad);
}

TEST_CASE("reconstruction-only weights leave the detector untouched by gradients") {
  const auto data = tiny_dataset(2, 7);
  nets::RestorationModel teacher_r(rest_spec(nets::Variant::teacher, 6, 1), 106);
  nets::DetectorModel teacher_d(det_spec(nets::Variant::teacher, 8, 1), 107);

  losses::DistillConfig dcfg;
  dcfg.w_detection = 0;
  dcfg.w_cwd = 0;
  dcfg.w_mgd = 0;
  dcfg.w_kl = 0;
  dcfg.tap_tags = {};
  auto cfg = fast_cfg(1, 23);
  cfg.weight_decay = 0.0;  // isolate gradient-driven updates

  auto result = distill::distill_joint(data, teacher_r, teacher_d, rest_spec(nets::Variant::small, 4, 1),
                                       det_spec(nets::Variant::small, 4, 1), dcfg, cfg, {});
  nets::DetectorModel fresh_det(det_spec(nets::Variant::small, 4, 1), derive_seed(23, 0x57BDD));
  CHECK(snapshot(*result.student_detector) == snapshot(fresh_det));

  // decoupling: the restorer trajectory is independent of the detector when
  // only reconstruction carries weight (same run with a wider detector)
  auto solo = distill::distill_joint(data, teacher_r, teacher_d, rest_spec(nets::Variant::small, 4, 1),
                                     det_spec(nets::Variant::small, 6, 1), dcfg, cfg, {});
  CHECK(snapshot(*result.student_restorer) == snapshot(*solo.student_restorer));
}

TEST_CASE("separate distillation freezes the restorer in phase 2 and matches the joint budget") {
  const auto data = tiny_dataset(4, 8);
  nets::RestorationModel teacher_r(rest_spec(nets::Variant::teacher, 6, 1), 108);
  nets::DetectorModel teacher_d(det_spec(nets::Variant::teacher, 8, 1), 109);

  losses::DistillConfig dcfg;
  dcfg.tap_tags = {"rest.stage2", "det.backbone"};
  auto cfg = fast_cfg(2, 29);

  auto joint = distill::distill_joint(data, teacher_r, teacher_d, rest_spec(nets::Variant::small, 4, 1),
                                      det_spec(nets::Variant::small, 4, 1), dcfg, cfg, {});
  auto sep = distill::distill_separate(data, teacher_r, teacher_d, rest_spec(nets::Variant::small, 4, 1),
                                       det_spec(nets::Variant::small, 4, 1), dcfg, cfg, {});
  // equal optimizer-step budget
  CHECK(joint.state.step == sep.state.step);

  // phase 2 never touches the restorer: rerun phase-1-only via a 1-epoch
  // separate run is not equivalent, so instead verify the phase boundary from
  // the loss history: reconstruction appears only in phase-1 records.
  bool phase2_has_reconstruction = false;
  const int phase1_steps = sep.state.step / 2;
  for (const auto& rec : sep.state.loss_history)
    if (rec.step >= phase1_steps && rec.components.count("reconstruction")) phase2_has_reconstruction = true;
  CHECK_FALSE(phase2_has_reconstruction);
}

TEST_CASE("divergence aborts with the step index in the message") {
  const auto data = tiny_dataset(4, 9);
  nets::RestorationModel teacher_r(rest_spec(nets::Variant::teacher, 6, 1), 110);
  nets::DetectorModel teacher_d(det_spec(nets::Variant::teacher, 8, 1), 111);

  // MGD's unnormalized feature sum overflows once the parameters explode.
  losses::DistillConfig dcfg;
  dcfg.tap_tags = {"rest.stage2"};
  dcfg.w_mgd = 1.0;
  auto cfg = fast_cfg(8, 37);
  cfg.warmup_epochs = 0;
  cfg.lr_base = 1e+12;
  CHECK_THROWS_WITH_AS(distill::distill_joint(data, teacher_r, teacher_d, rest_spec(nets::Variant::small, 4, 1),
                                              det_spec(nets::Variant::small, 4, 1), dcfg, cfg, {}),
                       doctest::Contains("step"), std::runtime_error);
}

}  // TEST_SUITE
