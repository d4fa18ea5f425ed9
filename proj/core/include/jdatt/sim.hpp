#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "jdatt/data.hpp"
#include "jdatt/sim_params.hpp"

namespace jdatt::sim {

/// Layout of a synthetic scene: moving geometric shapes (class = shape type)
/// on a textured background.
struct SceneSpec {
  int num_objects = 2;          // in [1, 8]
  int num_classes = 3;          // K, in [2, 6]
  int canvas_h = 64;
  int canvas_w = 64;
  int frames = 4;               // T
  double motion_amplitude = 1.0;  // pixels/frame
  int channels = 3;

  void validate() const;
};

/// Renders a deterministic scene. Returned boxes are the exact pixel
/// bounding boxes of each rendered shape.
std::pair<FrameSequence, std::vector<DetectionSet>> generate_scene(const SceneSpec& spec, uint64_t seed);

/// Applies tilt (smooth displacement warp), Gaussian blur, and multiplicative
/// scintillation, then clips to [0,1]. Identity when all three strengths are
/// zero. Fully determined by params.seed.
FrameSequence degrade(const FrameSequence& clean, const SimParams& params);

/// Severity presets. Values are desk-scale choices, not calibrated to any
/// physical turbulence condition.
SimParams preset_params(const std::string& name);  // "easy" | "medium" | "hard"

}  // namespace jdatt::sim
