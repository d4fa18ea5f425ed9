#include "jdatt/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "jdatt/rng.hpp"

namespace jdatt::sim {

namespace {

// Scintillation is finer-grained than tilt: a fixed short correlation length
// gives the speckle-like intensity noise the degradation is meant to model.
constexpr double kScintCorrelationPx = 2.0;

using Plane = std::vector<double>;  // H*W row-major

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> k(static_cast<size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<size_t>(i + radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[static_cast<size_t>(i + radius)];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable Gaussian blur with replicate borders.
void blur_plane(Plane& p, int h, int w, const std::vector<double>& kernel) {
  const int radius = static_cast<int>(kernel.size() / 2);
  Plane tmp(p.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int xx = std::clamp(x + i, 0, w - 1);
        acc += kernel[static_cast<size_t>(i + radius)] * p[static_cast<size_t>(y) * w + xx];
      }
      tmp[static_cast<size_t>(y) * w + x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int yy = std::clamp(y + i, 0, h - 1);
        acc += kernel[static_cast<size_t>(i + radius)] * tmp[static_cast<size_t>(yy) * w + x];
      }
      p[static_cast<size_t>(y) * w + x] = acc;
    }
  }
}

// White noise smoothed to the given correlation length, then normalized to
// zero mean and the requested std.
Plane smooth_noise_field(Rng& rng, int h, int w, double correlation_length, double target_std) {
  Plane p(static_cast<size_t>(h) * w);
  for (double& v : p) v = rng.gauss();
  if (correlation_length > 0) blur_plane(p, h, w, gaussian_kernel(correlation_length));
  double mean = 0.0;
  for (double v : p) mean += v;
  mean /= static_cast<double>(p.size());
  double var = 0.0;
  for (double v : p) var += (v - mean) * (v - mean);
  var /= static_cast<double>(p.size());
  const double std = std::sqrt(var);
  const double scale = std > 0 ? target_std / std : 0.0;
  for (double& v : p) v = (v - mean) * scale;
  return p;
}

double sample_replicate(const FrameSequence& seq, int ti, int ci, double gy, double gx) {
  gy = std::clamp(gy, 0.0, static_cast<double>(seq.h - 1));
  gx = std::clamp(gx, 0.0, static_cast<double>(seq.w - 1));
  const int y0 = static_cast<int>(std::floor(gy));
  const int x0 = static_cast<int>(std::floor(gx));
  const int y1 = std::min(y0 + 1, seq.h - 1);
  const int x1 = std::min(x0 + 1, seq.w - 1);
  const double wy = gy - y0, wx = gx - x0;
  const double top = seq.at(ti, ci, y0, x0) * (1 - wx) + seq.at(ti, ci, y0, x1) * wx;
  const double bot = seq.at(ti, ci, y1, x0) * (1 - wx) + seq.at(ti, ci, y1, x1) * wx;
  return top * (1 - wy) + bot * wy;
}

// ---- scene rendering ----

struct ShapeState {
  int cls = 0;
  double size = 6.0;  // half extent in pixels
  double cx = 0, cy = 0;
  double vx = 0, vy = 0;
  double color[3] = {0.8, 0.8, 0.8};
};

// Inside test in local shape coordinates; boundary at `size`.
bool inside_shape(int cls, double dx, double dy, double s) {
  switch (cls % 6) {
    case 0:  // disk
      return dx * dx + dy * dy <= s * s;
    case 1:  // square
      return std::max(std::fabs(dx), std::fabs(dy)) <= s;
    case 2:  // triangle (apex up)
      return dy >= -s && dy <= s && std::fabs(dx) <= (dy + s) / 2.0;
    case 3: {  // ring
      const double r2 = dx * dx + dy * dy;
      const double inner = 0.55 * s;
      return r2 <= s * s && r2 >= inner * inner;
    }
    case 4:  // diamond
      return std::fabs(dx) + std::fabs(dy) <= s;
    default:  // cross
      return (std::fabs(dx) <= 0.35 * s && std::fabs(dy) <= s) ||
             (std::fabs(dy) <= 0.35 * s && std::fabs(dx) <= s);
  }
}

// 2x2 supersampled coverage in [0,1].
double shape_alpha(int cls, double px, double py, double cx, double cy, double s) {
  static const double offs[2] = {-0.25, 0.25};
  int hits = 0;
  for (double oy : offs)
    for (double ox : offs)
      if (inside_shape(cls, px + ox - cx, py + oy - cy, s)) ++hits;
  return hits / 4.0;
}

const double kPalette[6][3] = {
    {0.90, 0.25, 0.20}, {0.20, 0.75, 0.30}, {0.25, 0.40, 0.95},
    {0.95, 0.85, 0.25}, {0.80, 0.30, 0.85}, {0.25, 0.85, 0.85},
};

}  // namespace

void SceneSpec::validate() const {
  if (num_objects < 1 || num_objects > 8) throw std::invalid_argument("SceneSpec: num_objects must be in [1,8]");
  if (num_classes < 2 || num_classes > 6)
    throw std::invalid_argument("SceneSpec: num_classes must be in [2,6] (six shape types available)");
  if (canvas_h < 8 || canvas_w < 8) throw std::invalid_argument("SceneSpec: canvas must be at least 8x8");
  if (frames < 1) throw std::invalid_argument("SceneSpec: frames must be >= 1");
  if (!(motion_amplitude >= 0)) throw std::invalid_argument("SceneSpec: motion_amplitude must be >= 0");
  if (channels != 1 && channels != 3) throw std::invalid_argument("SceneSpec: channels must be 1 or 3");
  const double max_size = std::min(canvas_h, canvas_w) / 4.0;
  if (max_size < 4.0) throw std::invalid_argument("SceneSpec: canvas too small to fit objects");
}

std::pair<FrameSequence, std::vector<DetectionSet>> generate_scene(const SceneSpec& spec, uint64_t seed) {
  spec.validate();
  const int h = spec.canvas_h, w = spec.canvas_w, cch = spec.channels;
  Rng rng(seed);

  // Static textured background: a coarse layer for context plus a finer
  // layer that gives blur and warping something to destroy.
  Plane base = smooth_noise_field(rng, h, w, 6.0, 1.0);
  Plane detail = smooth_noise_field(rng, h, w, 1.5, 1.0);
  double chan_gain[3];
  for (int c = 0; c < 3; ++c) chan_gain[c] = rng.uniform(0.06, 0.12);
  const double gx0 = rng.uniform(-0.12, 0.12), gy0 = rng.uniform(-0.12, 0.12);

  std::vector<ShapeState> shapes(static_cast<size_t>(spec.num_objects));
  const double min_size = 4.0;
  const double max_size = std::min(h, w) / 4.0;
  for (auto& sh : shapes) {
    sh.cls = static_cast<int>(rng.uniform_int(spec.num_classes));
    sh.size = rng.uniform(min_size, max_size);
    sh.cx = rng.uniform(sh.size + 1.0, w - sh.size - 2.0);
    sh.cy = rng.uniform(sh.size + 1.0, h - sh.size - 2.0);
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    sh.vx = spec.motion_amplitude * std::cos(angle);
    sh.vy = spec.motion_amplitude * std::sin(angle);
    for (int c = 0; c < 3; ++c) sh.color[c] = std::clamp(kPalette[sh.cls][c] + rng.uniform(-0.08, 0.08), 0.1, 1.0);
  }

  FrameSequence seq = FrameSequence::zeros(spec.frames, h, w, cch, "");
  std::vector<DetectionSet> gts;

  for (int ti = 0; ti < spec.frames; ++ti) {
    if (ti > 0) {
      for (auto& sh : shapes) {
        sh.cx += sh.vx + rng.gauss(0.0, 0.25 * spec.motion_amplitude);
        sh.cy += sh.vy + rng.gauss(0.0, 0.25 * spec.motion_amplitude);
        // Clamp and bounce so the object always fits the canvas.
        const double lox = sh.size + 1.0, hix = w - sh.size - 2.0;
        const double loy = sh.size + 1.0, hiy = h - sh.size - 2.0;
        if (sh.cx < lox) { sh.cx = lox; sh.vx = std::fabs(sh.vx); }
        if (sh.cx > hix) { sh.cx = hix; sh.vx = -std::fabs(sh.vx); }
        if (sh.cy < loy) { sh.cy = loy; sh.vy = std::fabs(sh.vy); }
        if (sh.cy > hiy) { sh.cy = hiy; sh.vy = -std::fabs(sh.vy); }
      }
    }

    DetectionSet det;
    det.frame_index = ti;

    // Paint background.
    for (int c = 0; c < cch; ++c) {
      const double gain = cch == 3 ? chan_gain[c] : chan_gain[0];
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const size_t i = static_cast<size_t>(y) * w + x;
          const double grad = gx0 * (static_cast<double>(x) / w - 0.5) + gy0 * (static_cast<double>(y) / h - 0.5);
          const double v = 0.32 + gain * base[i] + 0.09 * detail[i] + grad;
          seq.at(ti, c, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }

    // Paint shapes and record exact rendered extents.
    for (const auto& sh : shapes) {
      int min_x = w, max_x = -1, min_y = h, max_y = -1;
      const int x_lo = std::max(0, static_cast<int>(std::floor(sh.cx - sh.size - 2)));
      const int x_hi = std::min(w - 1, static_cast<int>(std::ceil(sh.cx + sh.size + 2)));
      const int y_lo = std::max(0, static_cast<int>(std::floor(sh.cy - sh.size - 2)));
      const int y_hi = std::min(h - 1, static_cast<int>(std::ceil(sh.cy + sh.size + 2)));
      for (int y = y_lo; y <= y_hi; ++y)
        for (int x = x_lo; x <= x_hi; ++x) {
          const double a = shape_alpha(sh.cls, x, y, sh.cx, sh.cy, sh.size);
          if (a <= 0.0) continue;
          min_x = std::min(min_x, x);
          max_x = std::max(max_x, x);
          min_y = std::min(min_y, y);
          max_y = std::max(max_y, y);
          for (int c = 0; c < cch; ++c) {
            const double paint = cch == 3 ? sh.color[c] : 0.45 + 0.09 * sh.cls;
            const double old = seq.at(ti, c, y, x);
            seq.at(ti, c, y, x) = static_cast<float>(std::clamp(old * (1 - a) + paint * a, 0.0, 1.0));
          }
        }
      if (max_x < min_x) continue;  // nothing rendered (cannot happen for valid specs)
      Box b;
      b.cx = (min_x + max_x + 1) / 2.0 / w;
      b.cy = (min_y + max_y + 1) / 2.0 / h;
      b.w = static_cast<double>(max_x - min_x + 1) / w;
      b.h = static_cast<double>(max_y - min_y + 1) / h;
      det.boxes.push_back(b);
      det.labels.push_back(sh.cls);
    }
    gts.push_back(std::move(det));
  }
  return {std::move(seq), std::move(gts)};
}

FrameSequence degrade(const FrameSequence& clean, const SimParams& params) {
  clean.validate();
  params.validate();
  const int h = clean.h, w = clean.w;
  Rng rng(params.seed);

  FrameSequence out = clean;
  Plane dx, dy, gain;
  const double rho = params.temporal_rho;
  const double fresh_w = std::sqrt(std::max(0.0, 1.0 - rho * rho));

  for (int ti = 0; ti < clean.t; ++ti) {
    // (1) smooth displacement field with AR(1) temporal correlation
    if (params.tilt_strength > 0) {
      Plane fx = smooth_noise_field(rng, h, w, params.tilt_correlation_length, params.tilt_strength);
      Plane fy = smooth_noise_field(rng, h, w, params.tilt_correlation_length, params.tilt_strength);
      if (ti == 0) {
        dx = std::move(fx);
        dy = std::move(fy);
      } else {
        for (size_t i = 0; i < dx.size(); ++i) {
          dx[i] = rho * dx[i] + fresh_w * fx[i];
          dy[i] = rho * dy[i] + fresh_w * fy[i];
        }
      }
      // (2) backward warp with bilinear sampling, replicate border
      FrameSequence warped = out;
      for (int c = 0; c < clean.c; ++c)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            warped.at(ti, c, y, x) = static_cast<float>(sample_replicate(out, ti, c, y + dy[i], x + dx[i]));
          }
      for (int c = 0; c < clean.c; ++c)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) out.at(ti, c, y, x) = warped.at(ti, c, y, x);
    }

    // (3) Gaussian blur, kernel truncated at 4 sigma and renormalized
    if (params.blur_sigma > 0) {
      const auto kernel = gaussian_kernel(params.blur_sigma);
      for (int c = 0; c < clean.c; ++c) {
        Plane p(static_cast<size_t>(h) * w);
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) p[static_cast<size_t>(y) * w + x] = out.at(ti, c, y, x);
        blur_plane(p, h, w, kernel);
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) out.at(ti, c, y, x) = static_cast<float>(p[static_cast<size_t>(y) * w + x]);
      }
    }

    // (4) multiplicative scintillation gain, then clip
    if (params.scintillation_strength > 0) {
      Plane fresh = smooth_noise_field(rng, h, w, kScintCorrelationPx, params.scintillation_strength);
      if (ti == 0) {
        gain = std::move(fresh);
      } else {
        for (size_t i = 0; i < gain.size(); ++i) gain[i] = rho * gain[i] + fresh_w * fresh[i];
      }
      for (int c = 0; c < clean.c; ++c)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            const double v = out.at(ti, c, y, x) * (1.0 + gain[i]);
            out.at(ti, c, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
          }
    }
  }
  return out;
}

SimParams preset_params(const std::string& name) {
  SimParams p;
  if (name == "easy") {
    p.tilt_strength = 0.5;
    p.tilt_correlation_length = 8.0;
    p.blur_sigma = 0.5;
    p.scintillation_strength = 0.06;
    p.temporal_rho = 0.8;
  } else if (name == "medium") {
    p.tilt_strength = 1.0;
    p.tilt_correlation_length = 6.0;
    p.blur_sigma = 0.8;
    p.scintillation_strength = 0.12;
    p.temporal_rho = 0.8;
  } else if (name == "hard") {
    p.tilt_strength = 2.0;
    p.tilt_correlation_length = 6.0;
    p.blur_sigma = 1.5;
    p.scintillation_strength = 0.10;
    p.temporal_rho = 0.8;
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  return p;
}

}  // namespace jdatt::sim
