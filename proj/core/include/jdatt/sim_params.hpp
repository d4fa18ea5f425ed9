#pragma once

#include <cstdint>

namespace jdatt {

/// Parameters of the simplified turbulence degradation: local image shifts
/// (tilt), defocus-like blur, and multiplicative intensity fluctuation
/// (scintillation), with AR(1) frame-to-frame correlation of the fields.
struct SimParams {
  double tilt_strength = 1.0;             // pixels, std of the displacement field
  double tilt_correlation_length = 6.0;   // pixels
  double blur_sigma = 0.8;                // pixels
  double scintillation_strength = 0.12;   // gain std, in [0,1)
  double temporal_rho = 0.8;              // AR(1) correlation, in [0,1]
  uint64_t seed = 0;

  void validate() const;
};

}  // namespace jdatt
