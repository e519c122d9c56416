#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "stormforge/image.hpp"

namespace stormforge {

struct Interval {
  double lo;
  double hi;
  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  double width() const noexcept { return hi - lo; }
};

// Physical rain control vector plus the geometry of the multi-scale stack.
struct RainParams {
  double intensity = 0.8;      // streak brightness contribution
  double density = 6000.0;     // expected drops per megapixel at scale 1
  double length = 12.0;        // streak length in pixels at scale 1
  double width = 1.0;          // streak width in pixels at scale 1
  double direction_deg = 0.0;  // streak angle from vertical, degrees
  int blur = 3;                // odd motion-kernel size in pixels
  std::uint64_t seed = 0;
  std::vector<double> scales{1.0, 0.5, 0.25};

  // Throws kInvalidArgument naming the offending field.
  void validate() const;
};

// Search boxes for the six physical components, in declaration order.
// They double as the validity boxes checked by RainParams::validate.
struct RainBounds {
  static constexpr Interval kIntensity{0.0, 1.0};
  static constexpr Interval kDensity{0.0, 20000.0};
  static constexpr Interval kLength{1.0, 40.0};
  static constexpr Interval kWidth{0.5, 4.0};
  static constexpr Interval kDirection{-45.0, 45.0};
  static constexpr Interval kBlur{1.0, 9.0};

  static constexpr std::array<Interval, 6> all() {
    return {kIntensity, kDensity, kLength, kWidth, kDirection, kBlur};
  }
};

// Per-drop jitter, fixed and never optimized.
inline constexpr double kDirectionJitterDeg = 3.0;
inline constexpr double kLengthJitter = 0.2;

// Nearest odd integer >= 1 (kernel sizes are discrete).
int nearest_odd_kernel(double k);

// One scale layer: Poisson-many jittered streaks stamped at `intensity`, then
// convolved with a normalized blur x blur motion kernel aligned to the streak
// direction. Nonnegative, not clamped. Deterministic in (params, scale, dims).
// Errors: kZeroAreaCanvas for a 0-sized canvas; kInvalidArgument if `scale`
// is not in params.scales or the canvas is smaller than 8 x 8.
GrayMap render_scale_layer(const RainParams& params, double scale, std::size_t height, std::size_t width);

// Sum of every scale layer, in scale order, clamped to [0, 1].
GrayMap render_rain(const RainParams& params, std::size_t height, std::size_t width);

// Same sum without the final clamp.
GrayMap render_rain_unclamped(const RainParams& params, std::size_t height, std::size_t width);

Image rain_to_image(const GrayMap& layer);

// Fraction of pixels with a strictly positive value.
double coverage_fraction(const GrayMap& layer);

}  // namespace stormforge
