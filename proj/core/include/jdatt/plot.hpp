#pragma once

#include <string>
#include <vector>

namespace jdatt::plot {

struct Color {
  float r = 0, g = 0, b = 0;
};

/// Minimal raster canvas with a built-in 5x7 font, enough for the report
/// charts without a plotting dependency.
class Canvas {
public:
  Canvas(int width, int height, Color background = {1, 1, 1});

  int width() const { return width_; }
  int height() const { return height_; }

  void set_pixel(int x, int y, Color c);
  void fill_rect(int x, int y, int w, int h, Color c);
  void line(int x0, int y0, int x1, int y1, Color c);
  /// Uppercases text; unknown glyphs render as blanks. scale is integer zoom.
  void text(int x, int y, const std::string& s, Color c, int scale = 1);
  int text_width(const std::string& s, int scale = 1) const;

  void save_png(const std::string& path) const;

private:
  int width_, height_;
  std::vector<float> rgb_;  // planar [3][h][w]
};

struct ScatterPoint {
  double x = 0, y = 0;
  std::string label;
};

struct BarGroup {
  std::string label;
  double psnr = 0, ssim = 0;
};

void scatter_chart(const std::string& path, const std::vector<ScatterPoint>& points, const std::string& x_label,
                   const std::string& y_label);
void quality_bars_chart(const std::string& path, const std::vector<BarGroup>& groups);

}  // namespace jdatt::plot
