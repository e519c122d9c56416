#pragma once

#include <cstddef>
#include <vector>

#include "stormforge/image.hpp"
#include "stormforge/rain.hpp"

namespace stormforge {

// Gaussian light source in normalized [0,1]^2 image coordinates.
struct LightSource {
  double x = 0.5;
  double y = 0.5;
  double strength = 1.0;
  double radius = 0.3;
};

struct LightBounds {
  static constexpr Interval kPosition{0.0, 1.0};
  static constexpr Interval kStrength{0.0, 2.0};
  static constexpr Interval kRadius{0.05, 0.6};
};

struct IlluminationParams {
  std::vector<LightSource> sources;
  double modulation = 0.5;       // w_l in G = w_l * L + (1 - w_l)
  double reference_gain = 1.0;   // G0
  double gain_threshold = 1.5;   // Gthr

  void validate() const;
};

// Three sources spread over the frame; the default Stage-2 starting point.
IlluminationParams default_illumination();

// Sum of Gaussian lobes sampled at pixel centres ((col + 0.5) / w, (row + 0.5) / h).
GrayMap eval_field(const IlluminationParams& params, std::size_t height, std::size_t width);

// G = w_l * L + (1 - w_l), unclamped.
GrayMap gain_map(const IlluminationParams& params, std::size_t height, std::size_t width);

struct GainStats {
  double mean = 0.0;
  double max = 0.0;
};

GainStats gain_stats(const GrayMap& gain);

struct IlluminationPenalties {
  double global = 0.0;  // (mean - G0)^2
  double range = 0.0;   // max(0, max - Gthr)
};

IlluminationPenalties illumination_penalties(const GainStats& stats, double reference_gain, double gain_threshold);

}  // namespace stormforge
