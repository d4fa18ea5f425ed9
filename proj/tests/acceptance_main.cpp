// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "jdatt/cli.hpp"
#include "jdatt/config.hpp"
#include "jdatt/distill.hpp"
#include "jdatt/evalkit.hpp"
#include "jdatt/losses.hpp"
#include "jdatt/nets.hpp"
#include "jdatt/rng.hpp"
#include "jdatt/sim.hpp"
#include "test_oracles.hpp"

namespace fs = std::filesystem;
using namespace jdatt;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool close_rel(double got, double want, double rel) {
  return std::fabs(got - want) <= rel * std::max(1.0, std::fabs(want));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Shared state across criteria that build on each other.
struct Workspace {
  fs::path dir;
  config::RunConfig cfg;
  std::string dataset_root;
  std::string teachers_dir;
  std::vector<AnnotatedSample> val;
  bool dataset_ready = false;
  bool teachers_ready = false;
};

// ---------------------------------------------------------------- criterion 1

Outcome criterion1_loss_oracles() {
  Outcome out;
  const auto t0 = Clock::now();
  const double tol = 1e-6;

  {  // charbonnier
    auto x = ad::constant(Tensor({2, 2}, {0.1, 0.2, 0.3, 0.4}));
    out.require(close_rel(losses::charbonnier(x, x, 1e-3)->value[0], 1e-3, tol), "charbonnier zero-diff");
    auto a = ad::constant(Tensor({1}, {0.5}));
    auto b = ad::constant(Tensor({1}, {0.5 + 3e-3}));
    out.require(close_rel(losses::charbonnier(a, b, 1e-3)->value[0], 3.1622776601683794e-3, tol),
                "charbonnier 3e-3 case");
    auto c = ad::constant(Tensor({1}, {1.5}));
    auto d = ad::constant(Tensor({1}, {0.5}));
    out.require(close_rel(losses::charbonnier(c, d, 1e-3)->value[0], 1.0000004999998751, tol),
                "charbonnier unit case");
  }
  {  // giou
    auto same = losses::BoxList::from_boxes({Box{0.5, 0.5, 0.2, 0.2}});
    out.require(std::fabs(losses::giou_loss(same, same)->value[0]) <= tol, "giou identical");
    auto a = losses::BoxList::from_boxes({Box{0.5, 0.5, 1.0, 1.0}});
    auto b = losses::BoxList::from_boxes({Box{1.5, 1.5, 1.0, 1.0}});
    out.require(close_rel(losses::giou_loss(a, b)->value[0], 1.5, tol), "giou corner-touching");
    auto c = losses::BoxList::from_boxes({Box{1.0, 1.0, 2.0, 2.0}});
    auto d = losses::BoxList::from_boxes({Box{2.0, 1.0, 2.0, 2.0}});
    out.require(close_rel(losses::giou_loss(c, d)->value[0], 2.0 / 3.0, tol), "giou overlap third");
  }
  {  // box l1
    auto a = losses::BoxList::from_boxes({Box{0.5, 0.5, 0.2, 0.2}});
    auto b = losses::BoxList::from_boxes({Box{0.6, 0.5, 0.2, 0.2}});
    out.require(std::fabs(losses::box_l1_loss(a, a)->value[0]) <= tol, "box_l1 identical");
    out.require(close_rel(losses::box_l1_loss(b, a)->value[0], 0.025, tol), "box_l1 0.1 shift");
    bool vacuous = false;
    auto empty = losses::BoxList::from_boxes({});
    out.require(losses::box_l1_loss(empty, empty, &vacuous)->value[0] == 0.0 && vacuous, "box_l1 empty flag");
  }
  {  // label
    losses::DetectionLossConfig cfg;
    losses::CellAssignment pos;
    pos.num_cells = 1;
    pos.num_classes = 1;
    pos.positive_cells = {0};
    pos.positive_labels = {0};
    pos.positive_boxes = {Box{0.5, 0.5, 0.1, 0.1}};
    auto p_half = ad::constant(Tensor({1, 1}, {0.5}));
    out.require(close_rel(losses::label_loss(p_half, {1.0}, pos, cfg)->value[0], 0.6931471805599453, tol),
                "label one positive");
    losses::CellAssignment neg;
    neg.num_cells = 1;
    neg.num_classes = 1;
    out.require(close_rel(losses::label_loss(p_half, {}, neg, cfg)->value[0], 0.17328679513998632, tol),
                "label one negative");
    auto p_zero = ad::constant(Tensor({3, 1}, {0.0, 0.0, 0.0}));
    losses::CellAssignment none;
    none.num_cells = 3;
    none.num_classes = 1;
    out.require(std::fabs(losses::label_loss(p_zero, {}, none, cfg)->value[0]) <= tol, "label confident negatives");
  }
  {  // cwd
    auto t = ad::constant(testutil::random_gauss({3, 2, 2}, 1));
    out.require(std::fabs(losses::cwd_loss(t, t, 2.0)->value[0]) <= tol, "cwd fixed point");
    auto tt = ad::constant(Tensor({1, 1, 2}, {1.0, 0.0}));
    auto ss = ad::constant(Tensor({1, 1, 2}, {0.0, 1.0}));
    out.require(close_rel(losses::cwd_loss(ss, tt, 1.0)->value[0], 0.46211715726000974, tol), "cwd hand value");
    auto t2 = ad::constant(testutil::random_gauss({2, 2, 2}, 2));
    auto s2 = ad::constant(testutil::random_gauss({2, 2, 2}, 3));
    const double base = losses::cwd_loss(s2, t2, 1.7)->value[0];
    Tensor ts = t2->value, sss = s2->value;
    for (int i = 0; i < 4; ++i) {
      ts[i] += 0.37;
      sss[i] += 0.37;
    }
    out.require(close_rel(losses::cwd_loss(ad::constant(sss), ad::constant(ts), 1.7)->value[0], base, tol),
                "cwd shift invariance");
  }
  {  // mgd
    losses::Generator ident(1, 0, losses::Generator::Mode::identity);
    losses::Aligner same(1, 1, 0);
    auto s1 = ad::constant(Tensor({1, 2, 2}, {0.2, 0.4, 0.6, 0.8}));
    auto t1 = ad::constant(Tensor({1, 2, 2}, {1.2, 1.4, 1.6, 1.8}));
    out.require(close_rel(losses::mgd_loss(s1, t1, 9, 0.0, ident, same)->value[0], 4.0, tol), "mgd sum 4");
    losses::Generator ident2(2, 0, losses::Generator::Mode::identity);
    losses::Aligner same2(2, 2, 0);
    auto s2 = ad::constant(testutil::random_gauss({2, 3, 3}, 4));
    auto t2 = ad::constant(testutil::random_gauss({2, 3, 3}, 5));
    const double v1 = losses::mgd_loss(s2, t2, 17, 0.5, ident2, same2)->value[0];
    const double v2 = losses::mgd_loss(s2, t2, 17, 0.5, ident2, same2)->value[0];
    out.require(v1 == v2, "mgd mask determinism");
    out.require(std::fabs(losses::mgd_loss(t2, t2, 3, 0.0, ident2, same2)->value[0]) <= tol, "mgd fixed point");
  }
  {  // kl
    auto z = ad::constant(testutil::random_gauss({4, 3}, 6));
    out.require(std::fabs(losses::kl_output_loss(z, z, 2.0)->value[0]) <= tol, "kl fixed point");
    auto zt = ad::constant(Tensor({1, 2}, {1.0, 0.0}));
    auto zs = ad::constant(Tensor({1, 2}, {0.0, 1.0}));
    out.require(close_rel(losses::kl_output_loss(zt, zs, 1.0)->value[0], 0.46211715726000974, tol),
                "kl hand value");
  }

  const double elapsed = seconds_since(t0);
  out.require(elapsed < 10.0, "runtime " + fmt(elapsed) + "s exceeds 10s");
  out.detail += (out.detail.empty() ? "" : "; ") + std::string("runtime ") + fmt(elapsed) + "s";
  return out;
}

// ---------------------------------------------------------------- criterion 2

Outcome criterion2_gradients() {
  Outcome out;
  const auto t0 = Clock::now();
  const double tol = 1e-3;
  const int instances = 20;

  auto check_family = [&](const std::string& name, const std::function<double(uint64_t)>& run) {
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) worst = std::max(worst, run(1000 + static_cast<uint64_t>(i)));
    out.require(worst < tol, name + " worst rel err " + fmt(worst));
  };

  check_family("charbonnier", [&](uint64_t seed) {
    auto x = ad::make_param(testutil::random_uniform({2, 4, 4}, seed, 0.1, 0.9));
    auto y = ad::constant(testutil::random_uniform({2, 4, 4}, seed + 1, 0.1, 0.9));
    return testutil::fd_gradient_check([&] { return losses::charbonnier(x, y, 1e-3); }, {x}).max_rel_err;
  });

  check_family("giou+l1", [&](uint64_t seed) {
    Rng rng(seed);
    const int m = 3;
    Tensor cx({m}), cy({m}), w({m}), h({m});
    std::vector<Box> targets;
    for (int i = 0; i < m; ++i) {
      cx[i] = rng.uniform(0.25, 0.75);
      cy[i] = rng.uniform(0.25, 0.75);
      w[i] = rng.uniform(0.1, 0.4);
      h[i] = rng.uniform(0.1, 0.4);
      targets.push_back(Box{rng.uniform(0.25, 0.75), rng.uniform(0.25, 0.75), rng.uniform(0.1, 0.4),
                            rng.uniform(0.1, 0.4)});
    }
    losses::BoxList pred{ad::make_param(cx), ad::make_param(cy), ad::make_param(w), ad::make_param(h)};
    losses::BoxList target = losses::BoxList::from_boxes(targets);
    const auto r = testutil::fd_gradient_check(
        [&] { return ad::add(losses::giou_loss(pred, target), losses::box_l1_loss(pred, target)); },
        {pred.cx, pred.cy, pred.w, pred.h});
    return r.max_rel_err;
  });

  check_family("label", [&](uint64_t seed) {
    Rng rng(seed);
    auto logits = ad::make_param(testutil::random_gauss({6, 2}, seed, 0.0, 1.0));
    losses::CellAssignment assignment;
    assignment.num_cells = 6;
    assignment.num_classes = 2;
    std::vector<double> ious;
    for (int cell = 0; cell < 6; ++cell)
      if (rng.bernoulli(0.4)) {
        assignment.positive_cells.push_back(cell);
        assignment.positive_labels.push_back(static_cast<int>(rng.uniform_int(2)));
        assignment.positive_boxes.push_back(Box{0.5, 0.5, 0.1, 0.1});
        ious.push_back(rng.uniform(0.1, 1.0));
      }
    losses::DetectionLossConfig cfg;
    const Tensor t = losses::label_targets(ad::sigmoid(logits), ious, assignment, cfg.alpha);
    return testutil::fd_gradient_check(
               [&] { return losses::label_loss_fixed(ad::sigmoid(logits), t, assignment, cfg); }, {logits})
        .max_rel_err;
  });

  check_family("cwd", [&](uint64_t seed) {
    auto s = ad::make_param(testutil::random_gauss({3, 4, 4}, seed));
    auto t = ad::constant(testutil::random_gauss({3, 4, 4}, seed + 1));
    return testutil::fd_gradient_check([&] { return losses::cwd_loss(s, t, 2.0); }, {s}).max_rel_err;
  });

  check_family("mgd", [&](uint64_t seed) {
    losses::Generator gen(3, seed);
    losses::Aligner aligner(2, 3, seed + 1);
    auto s = ad::make_param(testutil::random_gauss({2, 3, 3}, seed + 2));
    auto t = ad::constant(testutil::random_gauss({3, 3, 3}, seed + 3));
    std::vector<ad::Var> params{s};
    for (const auto& [n, p] : aligner.bag().entries()) params.push_back(p);
    for (const auto& [n, p] : gen.bag().entries()) params.push_back(p);
    return testutil::fd_gradient_check([&] { return losses::mgd_loss(s, t, seed, 0.5, gen, aligner); }, params)
        .max_rel_err;
  });

  check_family("kl", [&](uint64_t seed) {
    auto zt = ad::constant(testutil::random_gauss({4, 3}, seed));
    auto zs = ad::make_param(testutil::random_gauss({4, 3}, seed + 1));
    return testutil::fd_gradient_check([&] { return losses::kl_output_loss(zt, zs, 2.0); }, {zs}).max_rel_err;
  });

  check_family("align", [&](uint64_t seed) {
    losses::Aligner aligner(3, 5, seed);
    auto x = ad::make_param(testutil::random_gauss({3, 3, 3}, seed + 1));
    auto w = ad::constant(testutil::random_gauss({5, 3, 3}, seed + 2));
    std::vector<ad::Var> params{x};
    for (const auto& [n, p] : aligner.bag().entries()) params.push_back(p);
    return testutil::fd_gradient_check([&] { return ad::sum_all(ad::mul(aligner.apply(x, 3, 3), w)); }, params)
        .max_rel_err;
  });

  check_family("restoration-forward", [&](uint64_t seed) {
    nets::ModelSpec spec;
    spec.kind = nets::ModelKind::restoration;
    spec.variant = nets::Variant::small;
    spec.base_channels = 4;
    spec.depth = 1;
    nets::RestorationModel m(spec, seed);
    auto win = ad::constant(testutil::random_uniform({15, 16, 16}, seed + 1, 0.1, 0.9));
    auto clean = ad::constant(testutil::random_uniform({3, 16, 16}, seed + 2, 0.1, 0.9));
    std::vector<ad::Var> params;
    for (const auto& [n, p] : m.params()) params.push_back(p);
    return testutil::fd_gradient_check(
               [&] { return losses::charbonnier(m.forward(win).output, clean, 1e-3); }, params)
        .max_rel_err;
  });

  check_family("detector-forward", [&](uint64_t seed) {
    nets::ModelSpec spec;
    spec.kind = nets::ModelKind::detector;
    spec.variant = nets::Variant::small;
    spec.base_channels = 4;
    spec.depth = 1;
    spec.num_classes = 2;
    nets::DetectorModel m(spec, seed);
    auto frame = ad::constant(testutil::random_uniform({3, 16, 16}, seed + 1, 0.1, 0.9));
    std::vector<ad::Var> params;
    for (const auto& [n, p] : m.params()) params.push_back(p);
    return testutil::fd_gradient_check(
               [&] {
                 const auto fwd = m.forward(frame);
                 return ad::add(ad::mean_all(fwd.logits_rows),
                                ad::add(ad::mean_all(fwd.box_w), ad::mean_all(fwd.box_cx)));
               },
               params)
        .max_rel_err;
  });

  const double elapsed = seconds_since(t0);
  out.require(elapsed < 300.0, "runtime " + fmt(elapsed) + "s exceeds 5 min");
  out.detail += (out.detail.empty() ? "" : "; ") + std::string("runtime ") + fmt(elapsed) + "s";
  return out;
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion3_fixed_points() {
  Outcome out;
  const double tol = 1e-10;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    auto feat = ad::constant(testutil::random_gauss({3, 4, 4}, 100 + seed));
    out.require(std::fabs(losses::cwd_loss(feat, feat, 1.5)->value[0]) <= tol, "cwd fixed point");
    losses::Generator ident(3, 0, losses::Generator::Mode::identity);
    losses::Aligner same(3, 3, 0);
    out.require(std::fabs(losses::mgd_loss(feat, feat, seed, 0.0, ident, same)->value[0]) <= tol,
                "mgd fixed point");
    auto z = ad::constant(testutil::random_gauss({5, 4}, 200 + seed));
    out.require(std::fabs(losses::kl_output_loss(z, z, 2.0)->value[0]) <= tol, "kl fixed point");

    // additive logit/feature shifts
    auto zs = ad::constant(testutil::random_gauss({5, 4}, 300 + seed));
    const double kl_base = losses::kl_output_loss(z, zs, 1.5)->value[0];
    const double kl_shift_t = losses::kl_output_loss(ad::add_scalar(z, 2.5), zs, 1.5)->value[0];
    const double kl_shift_s = losses::kl_output_loss(z, ad::add_scalar(zs, -1.25), 1.5)->value[0];
    out.require(std::fabs(kl_shift_t - kl_base) <= tol, "kl teacher shift");
    out.require(std::fabs(kl_shift_s - kl_base) <= tol, "kl student shift");

    auto s = ad::constant(testutil::random_gauss({2, 3, 3}, 400 + seed));
    auto t = ad::constant(testutil::random_gauss({2, 3, 3}, 500 + seed));
    const double cwd_base = losses::cwd_loss(s, t, 2.0)->value[0];
    Tensor ss = s->value, ts = t->value;
    for (int i = 0; i < 9; ++i) {  // shift channel 0 everywhere in both maps
      ss[i] += 1.75;
      ts[i] += 1.75;
    }
    out.require(std::fabs(losses::cwd_loss(ad::constant(ss), ad::constant(ts), 2.0)->value[0] - cwd_base) <= tol,
                "cwd shift");
  }
  return out;
}

// ---------------------------------------------------------------- criterion 4

Outcome criterion4_map_oracle() {
  Outcome out;
  const auto t0 = Clock::now();
  int cases = 0;

  auto check_case = [&](const std::vector<DetectionSet>& preds, const std::vector<DetectionSet>& gts, int k) {
    const double got = evalkit::map_50_95(preds, gts, k);
    const double want = testutil::brute_map_50_95(preds, gts, k);
    ++cases;
    if (std::fabs(got - want) > 1e-12)
      out.require(false, "case " + std::to_string(cases) + ": got " + fmt(got) + " want " + fmt(want));
  };

  // frozen hand cases
  const Box gt{0.5, 0.5, 0.2, 0.2};
  DetectionSet g0;
  g0.boxes = {gt};
  g0.labels = {0};
  DetectionSet perfect = g0;
  perfect.scores = {0.9};
  check_case({perfect}, {g0}, 1);
  {
    const double v = evalkit::map_50_95({perfect}, {g0}, 1);
    out.require(std::fabs(v - 1.0) <= 1e-12, "perfect detection != 1.0");
  }

  DetectionSet unit_gt;
  unit_gt.boxes = {Box{0.5, 0.5, 1.0, 1.0}};
  unit_gt.labels = {0};
  DetectionSet p60;
  p60.boxes = {Box{0.75, 0.5, 1.0, 1.0}};
  p60.labels = {0};
  p60.scores = {0.9};
  check_case({p60}, {unit_gt}, 1);
  {
    const double v = evalkit::map_50_95({p60}, {unit_gt}, 1);
    out.require(std::fabs(v - 0.30) <= 1e-12, "IoU 0.60 case != 0.30, got " + fmt(v));
  }

  DetectionSet empty;
  check_case({empty}, {g0}, 1);
  out.require(evalkit::map_50_95({empty}, {g0}, 1) == 0.0, "no predictions != 0");

  // seeded corpus: <= 5 boxes per frame, <= 3 frames, <= 2 classes
  Rng rng(4242);
  while (cases < 60) {
    const int frames = 1 + static_cast<int>(rng.uniform_int(3));
    const int k = 1 + static_cast<int>(rng.uniform_int(2));
    std::vector<DetectionSet> preds(static_cast<size_t>(frames)), gts(static_cast<size_t>(frames));
    for (int f = 0; f < frames; ++f) {
      preds[f].frame_index = gts[f].frame_index = f;
      const int ngt = static_cast<int>(rng.uniform_int(6));
      for (int i = 0; i < ngt; ++i) {
        gts[f].boxes.push_back(Box{rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.08, 0.3),
                                   rng.uniform(0.08, 0.3)});
        gts[f].labels.push_back(static_cast<int>(rng.uniform_int(k)));
      }
      const int np = static_cast<int>(rng.uniform_int(6));
      for (int i = 0; i < np; ++i) {
        Box b;
        if (!gts[f].boxes.empty() && rng.bernoulli(0.7)) {
          b = gts[f].boxes[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(gts[f].boxes.size())))];
          b.cx += rng.gauss(0.0, 0.04);
          b.cy += rng.gauss(0.0, 0.04);
        } else {
          b = Box{rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.08, 0.3), rng.uniform(0.08, 0.3)};
        }
        preds[f].boxes.push_back(b);
        preds[f].labels.push_back(static_cast<int>(rng.uniform_int(k)));
        preds[f].scores.push_back(rng.uniform());
      }
    }
    check_case(preds, gts, k);
  }

  const double elapsed = seconds_since(t0);
  out.require(elapsed < 30.0, "runtime " + fmt(elapsed) + "s exceeds 30s");
  out.detail = std::to_string(cases) + " cases, runtime " + fmt(elapsed) + "s";
  return out;
}

// ---------------------------------------------------------------- criterion 5

Outcome criterion5_metric_references() {
  Outcome out;
  Tensor a({3, 12, 12}), b({3, 12, 12});
  a.fill(0.35);
  b.fill(0.25);
  const auto r = evalkit::psnr(a, b);
  out.require(!r.infinite && std::fabs(r.db - 20.0) <= 1e-9, "PSNR(0.1) = " + fmt(r.db));

  for (uint64_t seed = 0; seed < 5; ++seed) {
    const Tensor img = testutil::random_uniform({3, 16, 16}, 900 + seed);
    out.require(std::fabs(evalkit::ssim(img, img) - 1.0) <= 1e-12, "SSIM(a,a) != 1");
  }
  return out;
}

// ---------------------------------------------------------------- criterion 6

Outcome criterion6_restoration_direction(Workspace& ws) {
  Outcome out;
  const auto t0 = Clock::now();

  // desk dataset (200 train / 40 val) from the default config
  ws.dataset_root = (ws.dir / "dataset").string();
  ws.cfg.data.root = ws.dataset_root;
  cli::cmd_gen_data(ws.cfg, "", true);
  ws.dataset_ready = true;
  const auto train = load_dataset(ws.dataset_root + "/train");
  ws.val = load_dataset(ws.dataset_root + "/val");
  out.require(static_cast<int>(train.size()) == 200, "expected 200 train sequences");

  const auto train_t0 = Clock::now();
  const auto rest_spec =
      ws.cfg.models.spec_for(nets::ModelKind::restoration, nets::Variant::teacher, ws.cfg.data.num_classes);
  auto teacher_r = distill::train_restoration_teacher(
      train, rest_spec, ws.cfg.train_config(distill::TrainMode::teacher_restoration), ws.cfg.distill.epsilon);
  const double train_seconds = seconds_since(train_t0);
  out.require(train_seconds < 1800.0, "teacher training took " + fmt(train_seconds) + "s (> 30 min)");

  const auto det_spec =
      ws.cfg.models.spec_for(nets::ModelKind::detector, nets::Variant::teacher, ws.cfg.data.num_classes);
  auto teacher_d = distill::train_detector_teacher(
      train, det_spec, ws.cfg.train_config(distill::TrainMode::teacher_detector), ws.cfg.detection);

  ws.teachers_dir = (ws.dir / "teachers").string();
  fs::create_directories(ws.teachers_dir);
  save_checkpoint(ws.teachers_dir + "/teacher_restoration.ckpt", teacher_r->to_checkpoint());
  save_checkpoint(ws.teachers_dir + "/teacher_detector.ckpt", teacher_d->to_checkpoint());
  ws.teachers_ready = true;

  evalkit::EvalParams params;
  const auto distorted = evalkit::evaluate_system("distorted", ws.val, nullptr, nullptr, params);
  const auto restored = evalkit::evaluate_system("teacher", ws.val, teacher_r.get(), nullptr, params);
  const double gain = restored.psnr_mean - distorted.psnr_mean;
  out.require(gain >= 1.0, "PSNR gain " + fmt(gain) + " dB < 1 dB");
  out.detail = "distorted " + fmt(distorted.psnr_mean) + " dB, restored " + fmt(restored.psnr_mean) +
               " dB, gain " + fmt(gain) + " dB, train " + fmt(train_seconds) + "s, total " +
               fmt(seconds_since(t0)) + "s";
  return out;
}

// ---------------------------------------------------------------- criterion 7

Outcome criterion7_compression_ordering(const Workspace& ws) {
  Outcome out;
  for (const auto kind : {nets::ModelKind::restoration, nets::ModelKind::detector}) {
    int64_t prev = std::numeric_limits<int64_t>::max();
    for (const auto variant :
         {nets::Variant::teacher, nets::Variant::large, nets::Variant::medium, nets::Variant::small}) {
      const auto spec = ws.cfg.models.spec_for(kind, variant, ws.cfg.data.num_classes);
      int64_t count;
      if (kind == nets::ModelKind::restoration)
        count = nets::count_parameters(nets::RestorationModel(spec, 1));
      else
        count = nets::count_parameters(nets::DetectorModel(spec, 1));
      out.require(count < prev,
                  nets::to_string(kind) + "/" + nets::to_string(variant) + " not strictly smaller");
      prev = count;
    }
  }

  const int canvas = ws.cfg.data.canvas;
  nets::RestorationModel teacher_r(
      ws.cfg.models.spec_for(nets::ModelKind::restoration, nets::Variant::teacher, ws.cfg.data.num_classes), 2);
  nets::DetectorModel teacher_d(
      ws.cfg.models.spec_for(nets::ModelKind::detector, nets::Variant::teacher, ws.cfg.data.num_classes), 3);
  nets::RestorationModel small_r(
      ws.cfg.models.spec_for(nets::ModelKind::restoration, nets::Variant::small, ws.cfg.data.num_classes), 4);
  nets::DetectorModel small_d(
      ws.cfg.models.spec_for(nets::ModelKind::detector, nets::Variant::small, ws.cfg.data.num_classes), 5);

  const double teacher_ms = evalkit::latency_restoration_ms(teacher_r, canvas, canvas, 10, 100) +
                            evalkit::latency_detector_ms(teacher_d, canvas, canvas, 10, 100);
  const double small_ms = evalkit::latency_restoration_ms(small_r, canvas, canvas, 10, 100) +
                          evalkit::latency_detector_ms(small_d, canvas, canvas, 10, 100);
  out.require(small_ms < teacher_ms,
              "small pipeline " + fmt(small_ms) + "ms not faster than teacher " + fmt(teacher_ms) + "ms");
  out.detail = "teacher " + fmt(teacher_ms) + " ms vs small " + fmt(small_ms) + " ms";
  return out;
}

// ---------------------------------------------------------------- criteria 8 + 10

struct AbResult {
  double joint_map = 0, separate_map = 0;
  double joint_psnr = 0, separate_psnr = 0;
};

Outcome criterion8_joint_vs_separate(Workspace& ws, Outcome& frozen_out) {
  Outcome out;
  if (!ws.teachers_ready) {
    out.require(false, "teachers unavailable (criterion 6 failed earlier)");
    frozen_out.require(false, "teachers unavailable");
    return out;
  }
  const auto t0 = Clock::now();

  const std::string rckpt = ws.teachers_dir + "/teacher_restoration.ckpt";
  const std::string dckpt = ws.teachers_dir + "/teacher_detector.ckpt";
  const uint64_t rdigest = file_digest(rckpt);
  const uint64_t ddigest = file_digest(dckpt);

  const auto train = load_dataset(ws.dataset_root + "/train");
  const auto sr_spec =
      ws.cfg.models.spec_for(nets::ModelKind::restoration, nets::Variant::small, ws.cfg.data.num_classes);
  const auto sd_spec =
      ws.cfg.models.spec_for(nets::ModelKind::detector, nets::Variant::small, ws.cfg.data.num_classes);

  const Checkpoint rck = load_checkpoint(rckpt);
  const Checkpoint dck = load_checkpoint(dckpt);

  evalkit::EvalParams eval_params;
  eval_params.score_threshold = ws.cfg.eval.score_threshold;
  eval_params.nms_iou = ws.cfg.eval.nms_iou;
  eval_params.max_detections = ws.cfg.eval.max_detections;

  std::vector<AbResult> results;
  int joint_loss_drops = 0;
  const uint64_t seeds[3] = {ws.cfg.master_seed + 1, ws.cfg.master_seed + 2, ws.cfg.master_seed + 3};
  for (const uint64_t seed : seeds) {
    AbResult ab;
    for (const bool joint : {true, false}) {
      nets::RestorationModel teacher_r(
          ws.cfg.models.spec_for(nets::ModelKind::restoration, nets::Variant::teacher, ws.cfg.data.num_classes),
          0);
      teacher_r.load_state(rck);
      nets::DetectorModel teacher_d(
          ws.cfg.models.spec_for(nets::ModelKind::detector, nets::Variant::teacher, ws.cfg.data.num_classes), 0);
      teacher_d.load_state(dck);

      distill::TrainConfig tcfg = ws.cfg.train_config(distill::TrainMode::joint);
      tcfg.seed = seed;
      tcfg.mode = joint ? distill::TrainMode::joint : distill::TrainMode::separate;

      distill::DistillResult dr;
      if (joint)
        dr = distill::distill_joint(train, teacher_r, teacher_d, sr_spec, sd_spec, ws.cfg.distill, tcfg,
                                    ws.cfg.detection);
      else
        dr = distill::distill_separate(train, teacher_r, teacher_d, sr_spec, sd_spec, ws.cfg.distill, tcfg,
                                       ws.cfg.detection);

      if (joint) {
        // Training-progress direction: mean total loss over the final epoch
        // below the first epoch's mean (majority over the three seeds).
        const auto& history = dr.state.loss_history;
        const int spe = dr.state.step / std::max(tcfg.epochs, 1);
        double first = 0, last = 0;
        int nf = 0, nl = 0;
        for (const auto& rec : history) {
          if (rec.step < spe) {
            first += rec.total;
            ++nf;
          }
          if (rec.step >= dr.state.step - spe) {
            last += rec.total;
            ++nl;
          }
        }
        if (nf > 0 && nl > 0 && last / nl < first / nf) ++joint_loss_drops;
      }

      const auto eval = evalkit::evaluate_system(joint ? "joint" : "separate", ws.val, dr.student_restorer.get(),
                                                 dr.student_detector.get(), eval_params);
      if (joint) {
        ab.joint_map = eval.map;
        ab.joint_psnr = eval.psnr_mean;
      } else {
        ab.separate_map = eval.map;
        ab.separate_psnr = eval.psnr_mean;
      }
    }
    results.push_back(ab);
  }

  // criterion 10: frozen-teacher invariant across all six runs
  frozen_out.require(file_digest(rckpt) == rdigest, "restoration teacher checkpoint changed");
  frozen_out.require(file_digest(dckpt) == ddigest, "detector teacher checkpoint changed");
  frozen_out.detail = "digests stable across 6 distillation runs";

  double jm = 0, sm = 0, jp = 0, sp = 0;
  int joint_wins = 0;
  std::string per_seed;
  for (size_t i = 0; i < results.size(); ++i) {
    const auto& ab = results[i];
    jm += ab.joint_map;
    sm += ab.separate_map;
    jp += ab.joint_psnr;
    sp += ab.separate_psnr;
    if (ab.joint_map > ab.separate_map) ++joint_wins;
    per_seed += " seed" + std::to_string(i + 1) + " mAP " + fmt(ab.joint_map) + "/" + fmt(ab.separate_map);
  }
  jm /= 3;
  sm /= 3;
  jp /= 3;
  sp /= 3;

  out.require(jm >= sm - 0.01, "mean mAP joint " + fmt(jm) + " < separate " + fmt(sm) + " - 0.01");
  out.require(jp >= sp - 0.05, "mean PSNR joint " + fmt(jp) + " < separate " + fmt(sp) + " - 0.05 dB");
  out.require(joint_wins >= 2, "joint wins mAP on only " + std::to_string(joint_wins) + "/3 seeds");
  out.require(joint_loss_drops >= 2,
              "joint loss dropped from first to last epoch on only " + std::to_string(joint_loss_drops) + "/3 seeds");
  const double elapsed = seconds_since(t0);
  out.require(elapsed < 7200.0, "runtime " + fmt(elapsed) + "s exceeds 2h");
  out.detail = "mAP joint " + fmt(jm) + " vs separate " + fmt(sm) + ", PSNR " + fmt(jp) + " vs " + fmt(sp) +
               ", wins " + std::to_string(joint_wins) + "/3," + per_seed + ", runtime " + fmt(elapsed) + "s";
  return out;
}

// ---------------------------------------------------------------- criterion 9

Outcome criterion9_determinism(Workspace& ws) {
  Outcome out;
  if (!ws.dataset_ready || !ws.teachers_ready) {
    out.require(false, "dataset/teachers unavailable (criterion 6 failed earlier)");
    return out;
  }

  // byte-identical datasets from the same config + master_seed
  config::RunConfig cfg2 = ws.cfg;
  cfg2.data.root = (ws.dir / "dataset_repeat").string();
  cli::cmd_gen_data(cfg2, "", true);
  const uint64_t d1 = evalkit::dataset_digest(ws.dataset_root);
  const uint64_t d2 = evalkit::dataset_digest(cfg2.data.root);
  out.require(d1 == d2, "dataset regeneration is not byte-identical");

  // identical report.json across two eval runs
  const std::string e1 = (ws.dir / "eval_a").string();
  const std::string e2 = (ws.dir / "eval_b").string();
  fs::remove_all(e1);
  fs::remove_all(e2);
  cli::cmd_eval(ws.cfg, ws.dataset_root + "/val", ws.teachers_dir, "", "", {"distorted", "teacher"}, e1);
  cli::cmd_eval(ws.cfg, ws.dataset_root + "/val", ws.teachers_dir, "", "", {"distorted", "teacher"}, e2);
  out.require(file_digest(e1 + "/report.json") == file_digest(e2 + "/report.json"),
              "report.json differs between identical eval runs");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work_dir = "acceptance_work";
  for (int i = 1; i < argc - 1; ++i)
    if (std::strcmp(argv[i], "--work-dir") == 0) work_dir = argv[i + 1];
  fs::create_directories(work_dir);

  Workspace ws;
  ws.dir = work_dir;
  ws.cfg = config::RunConfig::defaults();
  ws.cfg.sim = sim::preset_params(ws.cfg.sim_preset);

  struct Entry {
    int id;
    std::string name;
    Outcome outcome;
  };
  std::vector<Entry> entries;
  Outcome frozen_teacher_outcome;  // criterion 10, filled during criterion 8

  auto run = [&entries](int id, const std::string& name, const std::function<Outcome()>& fn) {
    Outcome outcome;
    try {
      outcome = fn();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    entries.push_back({id, name, outcome});
    std::cout << (outcome.pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << name;
    if (!outcome.detail.empty()) std::cout << " (" << outcome.detail << ")";
    std::cout << std::endl;
  };

  run(1, "loss-oracle suite (1e-6 relative, <10s)", criterion1_loss_oracles);
  run(2, "gradient suite (rel err < 1e-3 at float64, >=20 instances, <5min)", criterion2_gradients);
  run(3, "fixed points and softmax shift invariance (1e-10)", criterion3_fixed_points);
  run(4, "mAP oracle equivalence (>=50 cases, exact, <30s)", criterion4_map_oracle);
  run(5, "metric references (PSNR 20dB +/- 1e-9, SSIM identity +/- 1e-12)", criterion5_metric_references);
  run(6, "restoration direction (teacher-restored >= distorted + 1dB, <=30min)",
      [&] { return criterion6_restoration_direction(ws); });
  run(7, "compression ordering (params teacher>L>M>S, small pipeline faster)",
      [&] { return criterion7_compression_ordering(ws); });
  run(8, "joint vs separate A/B (3 seeds, equal budgets, <=2h)",
      [&] { return criterion8_joint_vs_separate(ws, frozen_teacher_outcome); });
  run(9, "determinism (byte-identical datasets and report.json)", [&] { return criterion9_determinism(ws); });
  entries.push_back({10, "frozen-teacher invariant (checkpoint digests unchanged)", frozen_teacher_outcome});
  std::cout << (frozen_teacher_outcome.pass ? "[PASS]" : "[FAIL]")
            << " criterion 10: frozen-teacher invariant (checkpoint digests unchanged)";
  if (!frozen_teacher_outcome.detail.empty()) std::cout << " (" << frozen_teacher_outcome.detail << ")";
  std::cout << std::endl;

  int failures = 0;
  for (const auto& e : entries)
    if (!e.outcome.pass) ++failures;
  std::cout << (failures == 0 ? "ACCEPTANCE: all criteria passed"
                              : "ACCEPTANCE: " + std::to_string(failures) + " criterion(s) failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
