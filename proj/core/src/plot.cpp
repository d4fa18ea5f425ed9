#include "jdatt/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "jdatt/image_io.hpp"

namespace jdatt::plot {

namespace {
// 5x7 glyphs, one byte per column, LSB = top row.
struct Glyph {
  char ch;
  unsigned char cols[5];
};

const Glyph kFont[] = {
    {'0', {0x3E, 0x51, 0x49, 0x45, 0x3E}}, {'1', {0x00, 0x42, 0x7F, 0x40, 0x00}},
    {'2', {0x42, 0x61, 0x51, 0x49, 0x46}}, {'3', {0x21, 0x41, 0x45, 0x4B, 0x31}},
    {'4', {0x18, 0x14, 0x12, 0x7F, 0x10}}, {'5', {0x27, 0x45, 0x45, 0x45, 0x39}},
    {'6', {0x3C, 0x4A, 0x49, 0x49, 0x30}}, {'7', {0x01, 0x71, 0x09, 0x05, 0x03}},
    {'8', {0x36, 0x49, 0x49, 0x49, 0x36}}, {'9', {0x06, 0x49, 0x49, 0x29, 0x1E}},
    {'A', {0x7E, 0x11, 0x11, 0x11, 0x7E}}, {'B', {0x7F, 0x49, 0x49, 0x49, 0x36}},
    {'C', {0x3E, 0x41, 0x41, 0x41, 0x22}}, {'D', {0x7F, 0x41, 0x41, 0x22, 0x1C}},
    {'E', {0x7F, 0x49, 0x49, 0x49, 0x41}}, {'F', {0x7F, 0x09, 0x09, 0x09, 0x01}},
    {'G', {0x3E, 0x41, 0x49, 0x49, 0x7A}}, {'H', {0x7F, 0x08, 0x08, 0x08, 0x7F}},
    {'I', {0x00, 0x41, 0x7F, 0x41, 0x00}}, {'J', {0x20, 0x40, 0x41, 0x3F, 0x01}},
    {'K', {0x7F, 0x08, 0x14, 0x22, 0x41}}, {'L', {0x7F, 0x40, 0x40, 0x40, 0x40}},
    {'M', {0x7F, 0x02, 0x0C, 0x02, 0x7F}}, {'N', {0x7F, 0x04, 0x08, 0x10, 0x7F}},
    {'O', {0x3E, 0x41, 0x41, 0x41, 0x3E}}, {'P', {0x7F, 0x09, 0x09, 0x09, 0x06}},
    {'Q', {0x3E, 0x41, 0x51, 0x21, 0x5E}}, {'R', {0x7F, 0x09, 0x19, 0x29, 0x46}},
    {'S', {0x46, 0x49, 0x49, 0x49, 0x31}}, {'T', {0x01, 0x01, 0x7F, 0x01, 0x01}},
    {'U', {0x3F, 0x40, 0x40, 0x40, 0x3F}}, {'V', {0x1F, 0x20, 0x40, 0x20, 0x1F}},
    {'W', {0x3F, 0x40, 0x38, 0x40, 0x3F}}, {'X', {0x63, 0x14, 0x08, 0x14, 0x63}},
    {'Y', {0x07, 0x08, 0x70, 0x08, 0x07}}, {'Z', {0x61, 0x51, 0x49, 0x45, 0x43}},
    {'.', {0x00, 0x60, 0x60, 0x00, 0x00}}, {'-', {0x08, 0x08, 0x08, 0x08, 0x08}},
    {'+', {0x08, 0x08, 0x3E, 0x08, 0x08}}, {'%', {0x23, 0x13, 0x08, 0x64, 0x62}},
    {'/', {0x20, 0x10, 0x08, 0x04, 0x02}}, {'(', {0x00, 0x1C, 0x22, 0x41, 0x00}},
    {')', {0x00, 0x41, 0x22, 0x1C, 0x00}}, {':', {0x00, 0x36, 0x36, 0x00, 0x00}},
    {'=', {0x14, 0x14, 0x14, 0x14, 0x14}}, {'_', {0x40, 0x40, 0x40, 0x40, 0x40}},
    {'@', {0x32, 0x49, 0x79, 0x41, 0x3E}}, {',', {0x00, 0x50, 0x30, 0x00, 0x00}},
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00}},
};

const unsigned char* glyph_for(char c) {
  const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const auto& g : kFont)
    if (g.ch == up) return g.cols;
  return nullptr;
}

const Color kPalette[] = {
    {0.85f, 0.25f, 0.20f}, {0.15f, 0.55f, 0.85f}, {0.20f, 0.65f, 0.30f},
    {0.80f, 0.55f, 0.10f}, {0.55f, 0.30f, 0.75f}, {0.20f, 0.20f, 0.20f},
};

std::string format_number(double v) {
  char buf[64];
  if (v == 0) return "0";
  const double av = std::fabs(v);
  if (av >= 1e6 || av < 1e-2)
    std::snprintf(buf, sizeof(buf), "%.1e", v);
  else if (av >= 100)
    std::snprintf(buf, sizeof(buf), "%.0f", v);
  else
    std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}
}  // namespace

Canvas::Canvas(int width, int height, Color background) : width_(width), height_(height) {
  rgb_.assign(static_cast<size_t>(3) * width * height, 0.f);
  fill_rect(0, 0, width, height, background);
}

void Canvas::set_pixel(int x, int y, Color c) {
  if (x < 0 || x >= width_ || y < 0 || y >= height_) return;
  const size_t plane = static_cast<size_t>(width_) * height_;
  const size_t i = static_cast<size_t>(y) * width_ + x;
  rgb_[i] = c.r;
  rgb_[plane + i] = c.g;
  rgb_[2 * plane + i] = c.b;
}

void Canvas::fill_rect(int x, int y, int w, int h, Color c) {
  for (int yy = y; yy < y + h; ++yy)
    for (int xx = x; xx < x + w; ++xx) set_pixel(xx, yy, c);
}

void Canvas::line(int x0, int y0, int x1, int y1, Color c) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    set_pixel(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void Canvas::text(int x, int y, const std::string& s, Color c, int scale) {
  int cx = x;
  for (char ch : s) {
    const unsigned char* cols = glyph_for(ch);
    if (cols) {
      for (int col = 0; col < 5; ++col)
        for (int row = 0; row < 7; ++row)
          if (cols[col] & (1 << row)) fill_rect(cx + col * scale, y + row * scale, scale, scale, c);
    }
    cx += 6 * scale;
  }
}

int Canvas::text_width(const std::string& s, int scale) const {
  return static_cast<int>(s.size()) * 6 * scale;
}

void Canvas::save_png(const std::string& path) const {
  ImageBuffer img;
  img.width = width_;
  img.height = height_;
  img.channels = 3;
  img.values = rgb_;
  write_png(path, img);
}

namespace {
struct Axis {
  double lo = 0, hi = 1;
  double to_frac(double v) const { return hi > lo ? (v - lo) / (hi - lo) : 0.5; }
};

Axis nice_axis(double lo, double hi) {
  if (!(hi > lo)) {
    hi = lo + 1;
    lo = lo - 1;
  }
  const double pad = 0.08 * (hi - lo);
  return Axis{lo - pad, hi + pad};
}
}  // namespace

void scatter_chart(const std::string& path, const std::vector<ScatterPoint>& points, const std::string& x_label,
                   const std::string& y_label) {
  const int w = 720, h = 480, ml = 80, mr = 30, mt = 30, mb = 60;
  Canvas cv(w, h);
  const Color axis_col{0.1f, 0.1f, 0.1f};
  const Color grid{0.85f, 0.85f, 0.85f};

  double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  if (!points.empty()) {
    xlo = xhi = points[0].x;
    ylo = yhi = points[0].y;
    for (const auto& p : points) {
      xlo = std::min(xlo, p.x);
      xhi = std::max(xhi, p.x);
      ylo = std::min(ylo, p.y);
      yhi = std::max(yhi, p.y);
    }
  }
  const Axis ax = nice_axis(xlo, xhi);
  const Axis ay = nice_axis(std::min(0.0, ylo), yhi);

  const int pw = w - ml - mr, ph = h - mt - mb;
  auto px = [&](double v) { return ml + static_cast<int>(ax.to_frac(v) * pw); };
  auto py = [&](double v) { return mt + ph - static_cast<int>(ay.to_frac(v) * ph); };

  for (int i = 0; i <= 4; ++i) {
    const double fx = ax.lo + (ax.hi - ax.lo) * i / 4.0;
    const double fy = ay.lo + (ay.hi - ay.lo) * i / 4.0;
    cv.line(px(fx), mt, px(fx), mt + ph, grid);
    cv.line(ml, py(fy), ml + pw, py(fy), grid);
    cv.text(px(fx) - 12, mt + ph + 8, format_number(fx), axis_col);
    cv.text(8, py(fy) - 3, format_number(fy), axis_col);
  }
  cv.line(ml, mt, ml, mt + ph, axis_col);
  cv.line(ml, mt + ph, ml + pw, mt + ph, axis_col);
  cv.text(ml + pw / 2 - cv.text_width(x_label) / 2, h - 20, x_label, axis_col);
  cv.text(8, 10, y_label, axis_col);

  for (size_t i = 0; i < points.size(); ++i) {
    const Color c = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    const int x = px(points[i].x), y = py(points[i].y);
    cv.fill_rect(x - 4, y - 4, 9, 9, c);
    cv.text(x + 8, y - 3, points[i].label, c);
  }
  cv.save_png(path);
}

void quality_bars_chart(const std::string& path, const std::vector<BarGroup>& groups) {
  const int w = 840, h = 420, mt = 40, mb = 70;
  Canvas cv(w, h);
  const Color axis_col{0.1f, 0.1f, 0.1f};
  const int panel_w = w / 2 - 60;

  auto draw_panel = [&](int x0, const std::string& title, auto value_of, double vmax) {
    const int ph = h - mt - mb;
    cv.text(x0 + panel_w / 2 - cv.text_width(title) / 2, 14, title, axis_col);
    cv.line(x0, mt, x0, mt + ph, axis_col);
    cv.line(x0, mt + ph, x0 + panel_w, mt + ph, axis_col);
    for (int i = 0; i <= 4; ++i) {
      const double v = vmax * i / 4.0;
      const int y = mt + ph - static_cast<int>(ph * (vmax > 0 ? v / vmax : 0));
      cv.text(x0 - 44, y - 3, format_number(v), axis_col);
      cv.line(x0 - 3, y, x0, y, axis_col);
    }
    const int n = static_cast<int>(groups.size());
    if (n == 0) return;
    const int slot = panel_w / n;
    for (int i = 0; i < n; ++i) {
      const double v = value_of(groups[static_cast<size_t>(i)]);
      const int bh = vmax > 0 ? static_cast<int>(ph * std::clamp(v / vmax, 0.0, 1.0)) : 0;
      const Color c = kPalette[static_cast<size_t>(i) % (sizeof(kPalette) / sizeof(kPalette[0]))];
      cv.fill_rect(x0 + i * slot + slot / 6, mt + ph - bh, slot * 2 / 3, bh, c);
      cv.text(x0 + i * slot + 2, mt + ph + 10 + (i % 2) * 12, groups[static_cast<size_t>(i)].label, axis_col);
      cv.text(x0 + i * slot + slot / 6, mt + ph - bh - 12, format_number(v), c);
    }
  };

  double psnr_max = 1.0;
  for (const auto& g : groups)
    if (std::isfinite(g.psnr)) psnr_max = std::max(psnr_max, g.psnr * 1.15);
  draw_panel(70, "PSNR (DB)", [](const BarGroup& g) { return g.psnr; }, psnr_max);
  draw_panel(w / 2 + 50, "SSIM", [](const BarGroup& g) { return g.ssim; }, 1.0);
  cv.save_png(path);
}

}  // namespace jdatt::plot
