#pragma once

#include <string>
#include <vector>

namespace jdatt {

/// Planar float image in [0,1], channel-major (c, y, x), C in {1,3}.
struct ImageBuffer {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> values;

  float& at(int c, int y, int x) {
    return values[(static_cast<size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return values[(static_cast<size_t>(c) * height + y) * width + x];
  }
};

/// 8-bit PNG round trip. Values are quantized with round(v*255) on write,
/// so a save/load cycle moves any pixel by at most 0.5/255.
void write_png(const std::string& path, const ImageBuffer& img);
ImageBuffer read_png(const std::string& path);

}  // namespace jdatt
