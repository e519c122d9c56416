#include "stormforge/illumination.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stormforge/error.hpp"

namespace stormforge {

void IlluminationParams::validate() const {
  if (sources.empty()) throw Error(Errc::kInvalidArgument, "illumination.sources must be nonempty");
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const LightSource& s = sources[i];
    const std::string where = "illumination.sources[" + std::to_string(i) + "]";
    if (!std::isfinite(s.x) || !std::isfinite(s.y)) throw Error(Errc::kInvalidArgument, where + " position not finite");
    if (!LightBounds::kStrength.contains(s.strength)) {
      throw Error(Errc::kInvalidArgument, where + ".strength outside [0, 2]");
    }
    if (!LightBounds::kRadius.contains(s.radius)) {
      throw Error(Errc::kInvalidArgument, where + ".radius outside [0.05, 0.6]");
    }
  }
  if (!std::isfinite(modulation) || modulation < 0.0 || modulation > 1.0) {
    throw Error(Errc::kInvalidArgument, "illumination.modulation outside [0, 1]");
  }
  if (!std::isfinite(reference_gain) || !std::isfinite(gain_threshold) || !(reference_gain > 0.0) ||
      !(gain_threshold > reference_gain)) {
    throw Error(Errc::kInvalidArgument, "illumination requires gain_threshold > reference_gain > 0");
  }
}

IlluminationParams default_illumination() {
  IlluminationParams p;
  p.sources = {{0.25, 0.3, 1.0, 0.3}, {0.75, 0.3, 1.0, 0.3}, {0.5, 0.75, 1.0, 0.3}};
  return p;
}

GrayMap eval_field(const IlluminationParams& params, std::size_t height, std::size_t width) {
  GrayMap field(height, width);
  for (const LightSource& s : params.sources) {
    const double inv = 1.0 / (2.0 * s.radius * s.radius);
    for (std::size_t r = 0; r < height; ++r) {
      const double y = (static_cast<double>(r) + 0.5) / static_cast<double>(height);
      const double dy2 = (y - s.y) * (y - s.y);
      for (std::size_t c = 0; c < width; ++c) {
        const double x = (static_cast<double>(c) + 0.5) / static_cast<double>(width);
        field.at(r, c) += s.strength * std::exp(-((x - s.x) * (x - s.x) + dy2) * inv);
      }
    }
  }
  return field;
}

GrayMap gain_map(const IlluminationParams& params, std::size_t height, std::size_t width) {
  GrayMap g = eval_field(params, height, width);
  const double w = params.modulation;
  for (double& v : g.data) v = w * v + (1.0 - w);
  return g;
}

GainStats gain_stats(const GrayMap& gain) {
  if (gain.data.empty()) throw Error(Errc::kInvalidArgument, "gain_stats on an empty map");
  double sum = 0.0;
  double peak = gain.data.front();
  for (double v : gain.data) {
    sum += v;
    peak = std::max(peak, v);
  }
  return {sum / static_cast<double>(gain.data.size()), peak};
}

IlluminationPenalties illumination_penalties(const GainStats& stats, double reference_gain, double gain_threshold) {
  const double dev = stats.mean - reference_gain;
  return {dev * dev, std::max(0.0, stats.max - gain_threshold)};
}

}  // namespace stormforge
