#include "jdatt/nets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "jdatt/rng.hpp"
#include "json.hpp"

using nlohmann::json;

namespace jdatt::nets {

std::string to_string(ModelKind k) { return k == ModelKind::restoration ? "restoration" : "detector"; }

std::string to_string(Variant v) {
  switch (v) {
    case Variant::teacher: return "teacher";
    case Variant::large: return "large";
    case Variant::medium: return "medium";
    default: return "small";
  }
}

ModelKind kind_from_string(const std::string& s) {
  if (s == "restoration") return ModelKind::restoration;
  if (s == "detector") return ModelKind::detector;
  throw std::invalid_argument("unknown model kind: " + s);
}

Variant variant_from_string(const std::string& s) {
  if (s == "teacher") return Variant::teacher;
  if (s == "large") return Variant::large;
  if (s == "medium") return Variant::medium;
  if (s == "small") return Variant::small;
  throw std::invalid_argument("unknown variant: " + s);
}

void ModelSpec::validate() const {
  if (base_channels < 4) throw std::invalid_argument("ModelSpec: base_channels must be >= 4");
  if (depth < 1) throw std::invalid_argument("ModelSpec: depth must be >= 1");
  if (kind == ModelKind::detector && num_classes < 1)
    throw std::invalid_argument("ModelSpec: num_classes must be >= 1");
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("ModelSpec: window must be odd and >= 1");
}

std::string ModelSpec::to_json() const {
  json j{{"kind", to_string(kind)},       {"variant", to_string(variant)}, {"base_channels", base_channels},
         {"depth", depth},                {"num_classes", num_classes},    {"window", window}};
  return j.dump();
}

ModelSpec ModelSpec::from_json(const std::string& text) {
  const json j = json::parse(text);
  ModelSpec s;
  s.kind = kind_from_string(j.at("kind").get<std::string>());
  s.variant = variant_from_string(j.at("variant").get<std::string>());
  s.base_channels = j.at("base_channels").get<int>();
  s.depth = j.at("depth").get<int>();
  s.num_classes = j.at("num_classes").get<int>();
  s.window = j.at("window").get<int>();
  return s;
}

Checkpoint Model::to_checkpoint() const {
  Checkpoint ckpt;
  ckpt.meta_json = std::string("{\"model_spec\":") + spec_.to_json() + "}";
  for (const auto& [name, t] : bag_.state()) ckpt.tensors.emplace_back(name, t);
  return ckpt;
}

void Model::load_state(const Checkpoint& ckpt) { bag_.load_state(ckpt.tensors); }

int64_t count_parameters(const Model& model) {
  int64_t n = 0;
  for (const auto& [name, p] : model.params()) n += p->value.numel();
  return n;
}

namespace {

constexpr int kImageChannels = 3;

Tensor conv_weight_init(Rng& rng, int oc, int ic, int k, double std_scale = 1.0) {
  Tensor w({oc, ic, k, k});
  const double std = std_scale * std::sqrt(1.0 / (ic * k * k));
  for (int64_t i = 0; i < w.numel(); ++i) w[i] = rng.gauss(0.0, std);
  return w;
}

void make_conv(Model& m, Rng& rng, const std::string& name, int oc, int ic, int k, double std_scale = 1.0) {
  m.bag().add(name + ".w", conv_weight_init(rng, oc, ic, k, std_scale));
  m.bag().add(name + ".b", Tensor({oc}));
}

ad::Var conv_gelu(const ad::Var& x, const Model& m, const std::string& name, int stride, int pad) {
  const ParamBag& bag = m.bag();
  return ad::gelu(ad::conv2d(x, bag.get(name + ".w"), bag.get(name + ".b"), stride, pad));
}

ad::Var conv_linear(const ad::Var& x, const Model& m, const std::string& name, int stride, int pad) {
  const ParamBag& bag = m.bag();
  return ad::conv2d(x, bag.get(name + ".w"), bag.get(name + ".b"), stride, pad);
}

ad::Var res_block(const ad::Var& x, const Model& m, const std::string& name) {
  return ad::add(x, conv_gelu(x, m, name, 1, 1));
}

// Pixel inputs are [0,1]; the conv trunks see them centered.
ad::Var centered(const ad::Var& x) { return ad::add_scalar(x, -0.5); }

void take_tap(std::map<std::string, ad::Var>& taps, const std::vector<std::string>& requested,
              const std::string& tag, const ad::Var& v) {
  if (std::find(requested.begin(), requested.end(), tag) != requested.end()) taps[tag] = v;
}

void check_taps_known(const std::vector<std::string>& requested, const std::vector<std::string>& available) {
  for (const auto& tag : requested)
    if (std::find(available.begin(), available.end(), tag) == available.end())
      throw std::invalid_argument("unknown tap tag: " + tag);
}

}  // namespace

RestorationModel::RestorationModel(ModelSpec spec, uint64_t seed) : Model(std::move(spec)) {
  spec_.kind = ModelKind::restoration;
  spec_.validate();
  Rng rng(seed);
  const int b = spec_.base_channels;
  const int blocks = spec_.depth + (spec_.variant == Variant::teacher ? 1 : 0);
  in_channels_ = spec_.window * kImageChannels;

  make_conv(*this, rng, "s1.in", b, in_channels_, 3);
  for (int i = 0; i < blocks; ++i) make_conv(*this, rng, "s1.blk" + std::to_string(i), b, b, 3);
  make_conv(*this, rng, "s1.flow", 2, b, 3, 0.05);
  // Quarter-pixel bias keeps initial sampling positions off the bilinear
  // lattice, where the warp is not differentiable.
  {
    ad::Var fb = bag_.get("s1.flow.b");
    fb->value[0] = 0.25;
    fb->value[1] = -0.25;
  }

  make_conv(*this, rng, "s2.in", b, 2 * kImageChannels, 3);
  make_conv(*this, rng, "s2.down", 2 * b, b, 3);
  for (int i = 0; i < blocks; ++i) make_conv(*this, rng, "s2.blk" + std::to_string(i), 2 * b, 2 * b, 3);
  make_conv(*this, rng, "s2.up", b, 2 * b, 3);
  make_conv(*this, rng, "s2.fuse", b, b, 3);
  // Small init: the network starts out near the warped-center identity.
  make_conv(*this, rng, "s2.out", kImageChannels, b, 3, 0.05);
}

RestorationForward RestorationModel::forward(const ad::Var& window_in,
                                             const std::vector<std::string>& tap_tags) const {
  check_taps_known(tap_tags, available_taps());
  if (window_in->value.rank() != 3 || window_in->value.dim(0) != in_channels_)
    throw std::invalid_argument("restoration forward: expected [" + std::to_string(in_channels_) +
                                ",H,W] input, got " + window_in->value.shape_str());
  const int h = window_in->value.dim(1), w = window_in->value.dim(2);
  if (h % 2 != 0 || w % 2 != 0) throw std::invalid_argument("restoration forward: H and W must be even");

  RestorationForward out;
  const int blocks = spec_.depth + (spec_.variant == Variant::teacher ? 1 : 0);

  ad::Var f = conv_gelu(centered(window_in), *this, "s1.in", 1, 1);
  for (int i = 0; i < blocks; ++i) f = res_block(f, *this, "s1.blk" + std::to_string(i));
  take_tap(out.taps, tap_tags, "rest.stage1", f);
  const ad::Var flow = conv_linear(f, *this, "s1.flow", 1, 1);

  const int center = spec_.window / 2;
  const ad::Var center_frame = ad::slice_ch(window_in, center * kImageChannels, (center + 1) * kImageChannels);
  out.warped_center = ad::warp_bilinear(center_frame, flow);

  ad::Var e0 = conv_gelu(centered(ad::concat_ch({out.warped_center, center_frame})), *this, "s2.in", 1, 1);
  ad::Var d = conv_gelu(e0, *this, "s2.down", 2, 1);
  for (int i = 0; i < blocks; ++i) d = res_block(d, *this, "s2.blk" + std::to_string(i));
  ad::Var u = conv_gelu(ad::upsample_nearest2(d), *this, "s2.up", 1, 1);
  ad::Var fused = conv_gelu(ad::add(u, e0), *this, "s2.fuse", 1, 1);
  take_tap(out.taps, tap_tags, "rest.stage2", fused);
  const ad::Var residual = conv_linear(fused, *this, "s2.out", 1, 1);

  out.output = ad::clamp(ad::add(out.warped_center, residual), 0.0, 1.0);
  return out;
}

DetectorModel::DetectorModel(ModelSpec spec, uint64_t seed) : Model(std::move(spec)) {
  spec_.kind = ModelKind::detector;
  spec_.validate();
  Rng rng(seed);
  const int b = spec_.base_channels;
  const int blocks = spec_.depth + (spec_.variant == Variant::teacher ? 1 : 0);

  make_conv(*this, rng, "b0", b, kImageChannels, 3);
  make_conv(*this, rng, "b1", b, b, 3);
  for (int i = 0; i < spec_.depth; ++i) make_conv(*this, rng, "b1.blk" + std::to_string(i), b, b, 3);
  make_conv(*this, rng, "b2", 2 * b, b, 3);
  for (int i = 0; i < blocks; ++i) make_conv(*this, rng, "b2.blk" + std::to_string(i), 2 * b, 2 * b, 3);
  make_conv(*this, rng, "b3", 2 * b, 2 * b, 3);
  make_conv(*this, rng, "head", 2 * b, 2 * b, 3);
  make_conv(*this, rng, "cls", spec_.num_classes, 2 * b, 1, 0.05);
  make_conv(*this, rng, "box", 4, 2 * b, 1, 0.05);
  // Class-prior bias: start every cell at p ~ 0.01 so the focal background
  // term is quiet and positives separate quickly.
  bag_.get("cls.b")->value.fill(-std::log(99.0));
}

DetectorForward DetectorModel::forward(const ad::Var& frame, const std::vector<std::string>& tap_tags) const {
  check_taps_known(tap_tags, available_taps());
  if (frame->value.rank() != 3 || frame->value.dim(0) != kImageChannels)
    throw std::invalid_argument("detector forward: expected [3,H,W] input, got " + frame->value.shape_str());
  const int h = frame->value.dim(1), w = frame->value.dim(2);
  if (h % kDetectorStride != 0 || w % kDetectorStride != 0)
    throw std::invalid_argument("detector forward: H and W must be divisible by " +
                                std::to_string(kDetectorStride));

  DetectorForward out;
  out.cells_y = h / kDetectorStride;
  out.cells_x = w / kDetectorStride;
  const int blocks = spec_.depth + (spec_.variant == Variant::teacher ? 1 : 0);

  ad::Var f = conv_gelu(centered(frame), *this, "b0", 1, 1);
  f = conv_gelu(f, *this, "b1", 2, 1);
  for (int i = 0; i < spec_.depth; ++i) f = res_block(f, *this, "b1.blk" + std::to_string(i));
  f = conv_gelu(f, *this, "b2", 2, 1);
  for (int i = 0; i < blocks; ++i) f = res_block(f, *this, "b2.blk" + std::to_string(i));
  f = conv_gelu(f, *this, "b3", 2, 1);
  take_tap(out.taps, tap_tags, "det.backbone", f);
  ad::Var hh = conv_gelu(f, *this, "head", 1, 1);
  take_tap(out.taps, tap_tags, "det.head", hh);

  const ad::Var logits_chw = conv_linear(hh, *this, "cls", 1, 0);
  const ad::Var deltas = conv_linear(hh, *this, "box", 1, 0);
  out.logits_rows = ad::chw_to_rows(logits_chw);

  const int n = out.cells_y * out.cells_x;
  Tensor col_idx({n}), row_idx({n});
  for (int i = 0; i < out.cells_y; ++i)
    for (int j = 0; j < out.cells_x; ++j) {
      col_idx[static_cast<int64_t>(i) * out.cells_x + j] = j;
      row_idx[static_cast<int64_t>(i) * out.cells_x + j] = i;
    }
  const ad::Var tx = ad::flatten(ad::slice_ch(deltas, 0, 1));
  const ad::Var ty = ad::flatten(ad::slice_ch(deltas, 1, 2));
  // Log-size deltas are clamped so the decoded w, h stay strictly positive
  // and finite even for wildly off-scale predictions.
  const ad::Var tw = ad::clamp(ad::flatten(ad::slice_ch(deltas, 2, 3)), -20.0, 20.0);
  const ad::Var th = ad::clamp(ad::flatten(ad::slice_ch(deltas, 3, 4)), -20.0, 20.0);
  out.box_cx = ad::mul_scalar(ad::add(ad::sigmoid(tx), ad::constant(col_idx)), static_cast<double>(kDetectorStride) / w);
  out.box_cy = ad::mul_scalar(ad::add(ad::sigmoid(ty), ad::constant(row_idx)), static_cast<double>(kDetectorStride) / h);
  out.box_w = ad::mul_scalar(ad::exp_(tw), kBaseBoxSize);
  out.box_h = ad::mul_scalar(ad::exp_(th), kBaseBoxSize);
  return out;
}

Tensor window_input(const FrameSequence& seq, int center, int window) {
  if (center < 0 || center >= seq.t) throw std::invalid_argument("window_input: center out of range");
  Tensor out({window * seq.c, seq.h, seq.w});
  const int half = window / 2;
  for (int k = 0; k < window; ++k) {
    const int ti = std::clamp(center - half + k, 0, seq.t - 1);
    for (int c = 0; c < seq.c; ++c)
      for (int y = 0; y < seq.h; ++y)
        for (int x = 0; x < seq.w; ++x) out.at3(k * seq.c + c, y, x) = seq.at(ti, c, y, x);
  }
  return out;
}

LogitSet to_logit_set(const DetectorForward& fwd, TapSource source) {
  LogitSet out;
  out.logits = fwd.logits_rows->value;
  out.source = source;
  return out;
}

FeatureMap to_feature_map(const std::string& tag, const ad::Var& tap, TapSource source) {
  FeatureMap out;
  out.values = tap->value;
  out.layer_tag = tag;
  out.source = source;
  return out;
}

DetectionSet decode_detections(const DetectorForward& fwd, int frame_index, double score_threshold, double nms_iou,
                               int max_detections) {
  const Tensor& logits = fwd.logits_rows->value;
  const int n = logits.dim(0), k = logits.dim(1);

  struct Cand {
    double score;
    int cell, cls;
    Box box;
  };
  std::vector<Cand> cands;
  for (int cell = 0; cell < n; ++cell) {
    Box raw{fwd.box_cx->value[cell], fwd.box_cy->value[cell], fwd.box_w->value[cell], fwd.box_h->value[cell]};
    const Box clipped = clip_box(raw);
    if (clipped.w <= 1e-6 || clipped.h <= 1e-6) continue;
    for (int c = 0; c < k; ++c) {
      const double p = 1.0 / (1.0 + std::exp(-logits.at2(cell, c)));
      if (p >= score_threshold) cands.push_back({p, cell, c, clipped});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.cell != b.cell) return a.cell < b.cell;
    return a.cls < b.cls;
  });

  DetectionSet det;
  det.frame_index = frame_index;
  std::vector<Cand> kept;
  for (const auto& cand : cands) {
    if (static_cast<int>(kept.size()) >= max_detections) break;
    bool suppressed = false;
    for (const auto& kc : kept) {
      if (kc.cls == cand.cls && box_iou(kc.box, cand.box) >= nms_iou) {
        suppressed = true;
        break;
      }
    }
    if (suppressed) continue;
    kept.push_back(cand);
    det.boxes.push_back(cand.box);
    det.labels.push_back(cand.cls);
    det.scores.push_back(cand.score);
  }
  return det;
}

}  // namespace jdatt::nets
