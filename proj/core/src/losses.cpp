#include "jdatt/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "jdatt/rng.hpp"

namespace jdatt::losses {

using ad::Var;

void DetectionLossConfig::validate() const {
  if (!(gamma >= 0) || !std::isfinite(gamma)) throw std::invalid_argument("DetectionLossConfig: gamma must be >= 0");
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("DetectionLossConfig: alpha must be in (0,1)");
  if (!(w_boxes > 0 && w_giou > 0 && w_labels > 0) || !std::isfinite(w_boxes + w_giou + w_labels))
    throw std::invalid_argument("DetectionLossConfig: weights must be finite positive");
}

void DistillConfig::validate() const {
  if (!(tau_kl > 0) || !std::isfinite(tau_kl)) throw std::invalid_argument("DistillConfig: tau_kl must be > 0");
  if (!(tau_cwd > 0) || !std::isfinite(tau_cwd)) throw std::invalid_argument("DistillConfig: tau_cwd must be > 0");
  if (!(mask_ratio >= 0 && mask_ratio < 1)) throw std::invalid_argument("DistillConfig: mask_ratio must be in [0,1)");
  if (!(epsilon > 0)) throw std::invalid_argument("DistillConfig: epsilon must be > 0");
  const double weights[] = {w_reconstruction, w_detection, w_cwd, w_mgd, w_kl};
  double total = 0;
  for (double w : weights) {
    if (!(w >= 0) || !std::isfinite(w)) throw std::invalid_argument("DistillConfig: loss weights must be >= 0");
    total += w;
  }
  if (!(total > 0)) throw std::invalid_argument("DistillConfig: at least one loss weight must be > 0");
}

BoxList BoxList::from_boxes(const std::vector<Box>& boxes) {
  const int m = static_cast<int>(boxes.size());
  Tensor cx({m}), cy({m}), w({m}), h({m});
  for (int i = 0; i < m; ++i) {
    cx[i] = boxes[static_cast<size_t>(i)].cx;
    cy[i] = boxes[static_cast<size_t>(i)].cy;
    w[i] = boxes[static_cast<size_t>(i)].w;
    h[i] = boxes[static_cast<size_t>(i)].h;
  }
  return BoxList{ad::constant(std::move(cx)), ad::constant(std::move(cy)), ad::constant(std::move(w)),
                 ad::constant(std::move(h))};
}

CellAssignment assign_cells(const DetectionSet& gt, int cells_y, int cells_x, int num_classes) {
  CellAssignment out;
  out.num_cells = cells_y * cells_x;
  out.num_classes = num_classes;
  std::vector<int> owner(static_cast<size_t>(out.num_cells), -1);
  for (size_t g = 0; g < gt.boxes.size(); ++g) {
    const Box& b = gt.boxes[g];
    int cx = static_cast<int>(b.cx * cells_x);
    int cy = static_cast<int>(b.cy * cells_y);
    cx = std::min(std::max(cx, 0), cells_x - 1);
    cy = std::min(std::max(cy, 0), cells_y - 1);
    const int cell = cy * cells_x + cx;
    // First ground truth wins a contested cell.
    if (owner[static_cast<size_t>(cell)] >= 0) continue;
    owner[static_cast<size_t>(cell)] = static_cast<int>(g);
    out.positive_cells.push_back(cell);
    out.positive_labels.push_back(gt.labels[g]);
    out.positive_boxes.push_back(b);
  }
  return out;
}

Var charbonnier(const Var& x, const Var& y, double epsilon) {
  if (!x->value.same_shape(y->value))
    throw std::invalid_argument("charbonnier: shape mismatch " + x->value.shape_str() + " vs " +
                                y->value.shape_str());
  if (!(epsilon > 0)) throw std::invalid_argument("charbonnier: epsilon must be > 0");
  const Var d = ad::sub(x, y);
  return ad::mean_all(ad::sqrt_(ad::add_scalar(ad::mul(d, d), epsilon * epsilon)));
}

namespace {
struct Corners {
  Var x1, y1, x2, y2;
};

Corners to_corners(const BoxList& b) {
  const Var hw = ad::mul_scalar(b.w, 0.5);
  const Var hh = ad::mul_scalar(b.h, 0.5);
  return Corners{ad::sub(b.cx, hw), ad::sub(b.cy, hh), ad::add(b.cx, hw), ad::add(b.cy, hh)};
}

void check_valid_boxes(const BoxList& b, const char* op) {
  for (int i = 0; i < b.size(); ++i)
    if (!(b.w->value[i] > 0) || !(b.h->value[i] > 0))
      throw std::invalid_argument(std::string(op) + ": degenerate box (w or h <= 0)");
}
}  // namespace

Var giou_terms(const BoxList& pred, const BoxList& target) {
  if (pred.size() != target.size()) throw std::invalid_argument("giou: box list length mismatch");
  check_valid_boxes(pred, "giou");
  check_valid_boxes(target, "giou");
  const Corners a = to_corners(pred);
  const Corners b = to_corners(target);

  const Var zero = ad::constant(Tensor({pred.size()}));
  const Var iw = ad::max_el(ad::sub(ad::min_el(a.x2, b.x2), ad::max_el(a.x1, b.x1)), zero);
  const Var ih = ad::max_el(ad::sub(ad::min_el(a.y2, b.y2), ad::max_el(a.y1, b.y1)), zero);
  const Var inter = ad::mul(iw, ih);
  const Var area_a = ad::mul(pred.w, pred.h);
  const Var area_b = ad::mul(target.w, target.h);
  const Var uni = ad::sub(ad::add(area_a, area_b), inter);
  const Var iou = ad::div(inter, uni);

  const Var ew = ad::sub(ad::max_el(a.x2, b.x2), ad::min_el(a.x1, b.x1));
  const Var eh = ad::sub(ad::max_el(a.y2, b.y2), ad::min_el(a.y1, b.y1));
  const Var enclosure = ad::mul(ew, eh);
  const Var giou = ad::sub(iou, ad::div(ad::sub(enclosure, uni), enclosure));
  return ad::sub(ad::constant(Tensor::full({pred.size()}, 1.0)), giou);
}

Var giou_loss(const BoxList& pred, const BoxList& target) {
  if (pred.size() == 0) return ad::constant(Tensor({1}));
  return ad::mean_all(giou_terms(pred, target));
}

Var box_l1_loss(const BoxList& pred, const BoxList& target, bool* no_positives) {
  if (pred.size() != target.size()) throw std::invalid_argument("box_l1_loss: box list length mismatch");
  if (no_positives) *no_positives = pred.size() == 0;
  if (pred.size() == 0) return ad::constant(Tensor({1}));
  const Var dcx = ad::abs_(ad::sub(pred.cx, target.cx));
  const Var dcy = ad::abs_(ad::sub(pred.cy, target.cy));
  const Var dw = ad::abs_(ad::sub(pred.w, target.w));
  const Var dh = ad::abs_(ad::sub(pred.h, target.h));
  const Var total = ad::add(ad::add(dcx, dcy), ad::add(dw, dh));
  return ad::mul_scalar(ad::mean_all(total), 0.25);
}

namespace {
void check_label_inputs(const Var& p_ce, const CellAssignment& assignment) {
  if (p_ce->value.rank() != 2) throw std::invalid_argument("label_loss: p_ce must be [N,K]");
  const int n = p_ce->value.dim(0), k = p_ce->value.dim(1);
  if (n != assignment.num_cells || k != assignment.num_classes)
    throw std::invalid_argument("label_loss: p_ce dims do not match the assignment");
  if (n * k == 0) throw std::invalid_argument("label_loss: empty assignment");
  for (size_t i = 0; i < assignment.positive_cells.size(); ++i) {
    const int cls = assignment.positive_labels[i];
    if (cls < 0 || cls >= k) throw std::invalid_argument("label_loss: label out of range");
  }
}
}  // namespace

Tensor label_targets(const Var& p_ce, const std::vector<double>& iou_per_positive, const CellAssignment& assignment,
                     double alpha) {
  check_label_inputs(p_ce, assignment);
  if (iou_per_positive.size() != assignment.positive_cells.size())
    throw std::invalid_argument("label_loss: one IoU per positive required");
  const int k = p_ce->value.dim(1);
  Tensor t(p_ce->value.shape());
  for (size_t i = 0; i < assignment.positive_cells.size(); ++i) {
    const int64_t idx = static_cast<int64_t>(assignment.positive_cells[i]) * k + assignment.positive_labels[i];
    const double pv = std::min(std::max(p_ce->value[idx], 1e-7), 1.0 - 1e-7);
    t[idx] = std::pow(pv, alpha) * std::pow(iou_per_positive[i], 1.0 - alpha);
  }
  return t;
}

Var label_loss_fixed(const Var& p_ce, const Tensor& targets, const CellAssignment& assignment,
                     const DetectionLossConfig& cfg) {
  cfg.validate();
  check_label_inputs(p_ce, assignment);
  if (!(targets.shape() == p_ce->value.shape()))
    throw std::invalid_argument("label_loss: targets shape mismatch");
  const int n = p_ce->value.dim(0), k = p_ce->value.dim(1);

  const Var p = ad::clamp(p_ce, 1e-7, 1.0 - 1e-7);
  const Var log_p = ad::log_(p);
  const Var log_1p = ad::log_(ad::sub(ad::constant(Tensor::full(p->value.shape(), 1.0)), p));

  Tensor pos_mask(p->value.shape());
  for (size_t i = 0; i < assignment.positive_cells.size(); ++i)
    pos_mask[static_cast<int64_t>(assignment.positive_cells[i]) * k + assignment.positive_labels[i]] = 1.0;
  Tensor neg_mask(p->value.shape());
  Tensor one_minus_t(p->value.shape());
  for (int64_t i = 0; i < neg_mask.numel(); ++i) {
    neg_mask[i] = 1.0 - pos_mask[i];
    one_minus_t[i] = 1.0 - targets[i];
  }

  const Var pos_terms = ad::mul(ad::constant(std::move(pos_mask)),
                                ad::add(ad::mul(ad::constant(targets), log_p),
                                        ad::mul(ad::constant(std::move(one_minus_t)), log_1p)));
  const Var neg_terms = ad::mul(ad::constant(std::move(neg_mask)), ad::mul(ad::pow_const(p, cfg.gamma), log_1p));
  const Var total = ad::add(ad::sum_all(pos_terms), ad::sum_all(neg_terms));
  return ad::mul_scalar(total, -1.0 / static_cast<double>(n * k));
}

Var label_loss(const Var& p_ce, const std::vector<double>& iou_per_positive, const CellAssignment& assignment,
               const DetectionLossConfig& cfg) {
  return label_loss_fixed(p_ce, label_targets(p_ce, iou_per_positive, assignment, cfg.alpha), assignment, cfg);
}

Var cwd_loss(const Var& tap_s, const Var& tap_t, double tau_cwd) {
  if (!(tau_cwd > 0)) throw std::invalid_argument("cwd_loss: tau must be > 0");
  if (tap_s->value.rank() != 3 || tap_t->value.rank() != 3)
    throw std::invalid_argument("cwd_loss: feature maps must be [C,H,W]");
  if (!tap_s->value.same_shape(tap_t->value))
    throw std::invalid_argument("cwd_loss: misaligned dims " + tap_s->value.shape_str() + " vs " +
                                tap_t->value.shape_str() + " (align_features first)");
  const int c = tap_s->value.dim(0);
  const int hw = tap_s->value.dim(1) * tap_s->value.dim(2);

  const Var s_rows = ad::reshape(tap_s, {c, hw});
  const Var t_rows = ad::reshape(tap_t, {c, hw});
  const Var log_q = ad::log_softmax_rows(ad::mul_scalar(s_rows, 1.0 / tau_cwd));
  // Teacher side carries no gradient.
  const Var t_scaled = ad::detach(ad::mul_scalar(t_rows, 1.0 / tau_cwd));
  const Var p = ad::softmax_rows(t_scaled);
  const Var log_p = ad::log_softmax_rows(t_scaled);
  const Var kl = ad::sum_all(ad::mul(p, ad::sub(log_p, log_q)));
  return ad::mul_scalar(kl, tau_cwd * tau_cwd / static_cast<double>(c));
}

double cwd_loss(const FeatureMap& tap_s, const FeatureMap& tap_t, double tau_cwd) {
  ad::NoGradGuard ng;
  return cwd_loss(ad::constant(tap_s.values), ad::constant(tap_t.values), tau_cwd)->value[0];
}

Aligner::Aligner(int c_in, int c_out, uint64_t seed) : c_in_(c_in), c_out_(c_out) {
  Tensor w({c_out, c_in, 1, 1});
  if (c_in == c_out) {
    for (int i = 0; i < c_out; ++i) w[static_cast<int64_t>(i) * c_in + i] = 1.0;
  } else {
    Rng rng(seed);
    const double std = std::sqrt(1.0 / c_in);
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = rng.gauss(0.0, std);
  }
  bag_.add("align.w", std::move(w));
  bag_.add("align.b", Tensor({c_out}));
}

Var Aligner::apply(const Var& x, int out_h, int out_w) const {
  if (x->value.rank() != 3 || x->value.dim(0) != c_in_)
    throw std::invalid_argument("aligner: expected [" + std::to_string(c_in_) + ",H,W] input");
  const Var projected = ad::conv2d(x, bag_.get("align.w"), bag_.get("align.b"), 1, 0);
  return ad::resize_bilinear(projected, out_h, out_w);
}

Generator::Generator(int channels, uint64_t seed, Mode mode) : mode_(mode) {
  if (mode_ == Mode::identity) return;
  Rng rng(seed);
  const double std = std::sqrt(1.0 / (channels * 9));
  Tensor w1({channels, channels, 3, 3}), w2({channels, channels, 3, 3});
  for (int64_t i = 0; i < w1.numel(); ++i) w1[i] = rng.gauss(0.0, std);
  for (int64_t i = 0; i < w2.numel(); ++i) w2[i] = rng.gauss(0.0, std);
  bag_.add("gen.w1", std::move(w1));
  bag_.add("gen.b1", Tensor({channels}));
  bag_.add("gen.w2", std::move(w2));
  bag_.add("gen.b2", Tensor({channels}));
}

Var Generator::apply(const Var& x) const {
  if (mode_ == Mode::identity) return x;
  const Var h = ad::gelu(ad::conv2d(x, bag_.get("gen.w1"), bag_.get("gen.b1"), 1, 1));
  return ad::conv2d(h, bag_.get("gen.w2"), bag_.get("gen.b2"), 1, 1);
}

Var align_features(const Var& tap_s, int c_out, int h_out, int w_out, const Aligner& aligner) {
  (void)c_out;
  return aligner.apply(tap_s, h_out, w_out);
}

Var mgd_loss(const Var& tap_s, const Var& tap_t, uint64_t mask_seed, double lambda, const Generator& generator,
             const Aligner& aligner) {
  if (!(lambda >= 0 && lambda < 1)) throw std::invalid_argument("mgd_loss: lambda must be in [0,1)");
  if (tap_t->value.rank() != 3) throw std::invalid_argument("mgd_loss: teacher map must be [C,H,W]");
  const int ct = tap_t->value.dim(0), ht = tap_t->value.dim(1), wt = tap_t->value.dim(2);

  const Var aligned = aligner.apply(tap_s, ht, wt);
  if (aligned->value.dim(0) != ct) throw std::invalid_argument("mgd_loss: aligner output channels mismatch");

  // Spatial Bernoulli mask, broadcast across channels. P(mask == 0) = lambda.
  Rng rng(mask_seed);
  Tensor mask({ct, ht, wt});
  for (int y = 0; y < ht; ++y)
    for (int x = 0; x < wt; ++x) {
      const double m = rng.bernoulli(lambda) ? 0.0 : 1.0;
      for (int c = 0; c < ct; ++c) mask.at3(c, y, x) = m;
    }

  const Var masked = ad::mul(aligned, ad::constant(std::move(mask)));
  const Var rec = generator.apply(masked);
  const Var diff = ad::sub(ad::detach(tap_t), rec);
  return ad::sum_all(ad::mul(diff, diff));
}

Var kl_output_loss(const Var& z_t, const Var& z_s, double tau, const std::vector<double>& row_mask) {
  if (!(tau > 0)) throw std::invalid_argument("kl_output_loss: tau must be > 0");
  if (z_t->value.rank() != 2 || z_s->value.rank() != 2 || !z_t->value.same_shape(z_s->value))
    throw std::invalid_argument("kl_output_loss: logit sets must share [N,K]");
  const int n = z_t->value.dim(0), k = z_t->value.dim(1);
  if (!row_mask.empty() && static_cast<int>(row_mask.size()) != n)
    throw std::invalid_argument("kl_output_loss: row mask size mismatch");

  const Var t_scaled = ad::detach(ad::mul_scalar(z_t, 1.0 / tau));
  const Var p = ad::softmax_rows(t_scaled);
  const Var log_p = ad::log_softmax_rows(t_scaled);
  const Var log_q = ad::log_softmax_rows(ad::mul_scalar(z_s, 1.0 / tau));
  Var terms = ad::mul(p, ad::sub(log_p, log_q));

  double denom = n;
  if (!row_mask.empty()) {
    Tensor m({n, k});
    double active = 0;
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < k; ++c) m.at2(r, c) = row_mask[static_cast<size_t>(r)];
      active += row_mask[static_cast<size_t>(r)] > 0 ? 1.0 : 0.0;
    }
    if (active == 0) return ad::constant(Tensor({1}));
    terms = ad::mul(terms, ad::constant(std::move(m)));
    denom = active;
  }
  return ad::mul_scalar(ad::sum_all(terms), tau * tau / denom);
}

double kl_output_loss(const LogitSet& z_t, const LogitSet& z_s, double tau) {
  ad::NoGradGuard ng;
  return kl_output_loss(ad::constant(z_t.logits), ad::constant(z_s.logits), tau)->value[0];
}

}  // namespace jdatt::losses
