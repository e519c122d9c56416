#include "stormforge/rain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "stormforge/error.hpp"

namespace stormforge {
namespace {

void check_box(const char* field, double v, Interval box) {
  if (!std::isfinite(v) || !box.contains(v)) {
    throw Error(Errc::kInvalidArgument, std::string("rain.") + field + " = " + std::to_string(v) +
                                            " outside [" + std::to_string(box.lo) + ", " +
                                            std::to_string(box.hi) + "]");
  }
}

struct Tap {
  int dy;
  int dx;
  double weight;
};

// Line kernel through the centre of a size x size grid, bilinearly splatted
// from dense samples and normalized to unit sum.
std::vector<Tap> motion_kernel(int size, double direction_deg) {
  if (size <= 1) return {{0, 0, 1.0}};
  const int half = size / 2;
  std::vector<double> grid(static_cast<std::size_t>(size * size), 0.0);
  const double theta = direction_deg * std::numbers::pi / 180.0;
  const double ux = std::sin(theta);
  const double uy = std::cos(theta);
  const int samples = 8 * size + 1;
  for (int i = 0; i < samples; ++i) {
    const double t = -half + static_cast<double>(2 * half) * i / (samples - 1);
    const double x = half + t * ux;
    const double y = half + t * uy;
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
    const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
    for (int j = 0; j < 4; ++j) {
      if (xs[j] >= 0 && xs[j] < size && ys[j] >= 0 && ys[j] < size) {
        grid[static_cast<std::size_t>(ys[j] * size + xs[j])] += w[j];
      }
    }
  }
  double total = 0.0;
  for (double v : grid) total += v;
  std::vector<Tap> taps;
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double v = grid[static_cast<std::size_t>(r * size + c)];
      if (v > 0.0) taps.push_back({r - half, c - half, v / total});
    }
  }
  return taps;
}

GrayMap convolve(const GrayMap& in, const std::vector<Tap>& taps) {
  if (taps.size() == 1 && taps[0].dy == 0 && taps[0].dx == 0) return in;
  GrayMap out(in.height, in.width);
  const auto h = static_cast<int>(in.height);
  const auto w = static_cast<int>(in.width);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (const Tap& t : taps) {
        const int rr = r + t.dy;
        const int cc = c + t.dx;
        if (rr >= 0 && rr < h && cc >= 0 && cc < w) acc += t.weight * in.data[static_cast<std::size_t>(rr * w + cc)];
      }
      out.data[static_cast<std::size_t>(r * w + c)] = acc;
    }
  }
  return out;
}

// Antialiased segment stamp; keeps the brighter of existing and new values.
void stamp_segment(GrayMap& map, double x0, double y0, double x1, double y1, double stroke, double value) {
  const double reach = stroke / 2.0 + 1.0;
  const int c_lo = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - reach)));
  const int c_hi = std::min(static_cast<int>(map.width) - 1, static_cast<int>(std::ceil(std::max(x0, x1) + reach)));
  const int r_lo = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - reach)));
  const int r_hi = std::min(static_cast<int>(map.height) - 1, static_cast<int>(std::ceil(std::max(y0, y1) + reach)));
  const double dx = x1 - x0;
  const double dy = y1 - y0;
  const double len2 = dx * dx + dy * dy;
  const double peak = std::min(1.0, stroke);
  for (int r = r_lo; r <= r_hi; ++r) {
    for (int c = c_lo; c <= c_hi; ++c) {
      const double px = c + 0.5;
      const double py = r + 0.5;
      double t = len2 > 0.0 ? ((px - x0) * dx + (py - y0) * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double ex = px - (x0 + t * dx);
      const double ey = py - (y0 + t * dy);
      const double dist = std::sqrt(ex * ex + ey * ey);
      const double cov = std::clamp(stroke / 2.0 + 0.5 - dist, 0.0, peak);
      if (cov > 0.0) {
        double& cell = map.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        cell = std::max(cell, value * cov);
      }
    }
  }
}

std::mt19937_64 layer_rng(std::uint64_t seed, double scale) {
  const auto bits = std::bit_cast<std::uint64_t>(scale);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(bits), static_cast<std::uint32_t>(bits >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

int nearest_odd_kernel(double k) {
  if (!std::isfinite(k) || k <= 1.0) return 1;
  // Odd integers 2m+1 closest to k: m = round((k - 1) / 2).
  return 2 * static_cast<int>(std::lround((k - 1.0) / 2.0)) + 1;
}

void RainParams::validate() const {
  check_box("intensity", intensity, RainBounds::kIntensity);
  check_box("density", density, RainBounds::kDensity);
  check_box("length", length, RainBounds::kLength);
  check_box("width", width, RainBounds::kWidth);
  check_box("direction_deg", direction_deg, RainBounds::kDirection);
  check_box("blur", blur, RainBounds::kBlur);
  if (blur % 2 == 0) throw Error(Errc::kInvalidArgument, "rain.blur must be odd, got " + std::to_string(blur));
  if (scales.empty()) throw Error(Errc::kInvalidArgument, "rain.scales must be nonempty");
  if (scales.front() != 1.0) throw Error(Errc::kInvalidArgument, "rain.scales must start at 1.0");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0 && scales[i] <= 1.0)) {
      throw Error(Errc::kInvalidArgument, "rain.scales[" + std::to_string(i) + "] outside (0, 1]");
    }
    if (i > 0 && !(scales[i] < scales[i - 1])) {
      throw Error(Errc::kInvalidArgument, "rain.scales must be strictly decreasing");
    }
  }
}

GrayMap render_scale_layer(const RainParams& params, double scale, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw Error(Errc::kZeroAreaCanvas, "rain canvas has zero area");
  if (height < 8 || width < 8) throw Error(Errc::kInvalidArgument, "rain canvas must be at least 8x8");
  if (std::find(params.scales.begin(), params.scales.end(), scale) == params.scales.end()) {
    throw Error(Errc::kInvalidArgument, "scale " + std::to_string(scale) + " not in rain.scales");
  }
  params.validate();

  GrayMap layer(height, width);
  auto rng = layer_rng(params.seed, scale);
  const double mean_drops = params.density * (static_cast<double>(height * width) / 1e6) * scale;
  int drops = 0;
  if (mean_drops > 0.0) drops = std::poisson_distribution<int>(mean_drops)(rng);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double stroke = params.width * scale;
  for (int i = 0; i < drops; ++i) {
    const double cx = unit(rng) * static_cast<double>(width);
    const double cy = unit(rng) * static_cast<double>(height);
    const double angle = params.direction_deg + kDirectionJitterDeg * (2.0 * unit(rng) - 1.0);
    const double len = params.length * scale * (1.0 + kLengthJitter * (2.0 * unit(rng) - 1.0));
    const double theta = angle * std::numbers::pi / 180.0;
    const double hx = 0.5 * len * std::sin(theta);
    const double hy = 0.5 * len * std::cos(theta);
    if (params.intensity > 0.0) stamp_segment(layer, cx - hx, cy - hy, cx + hx, cy + hy, stroke, params.intensity);
  }
  return convolve(layer, motion_kernel(params.blur, params.direction_deg));
}

GrayMap render_rain_unclamped(const RainParams& params, std::size_t height, std::size_t width) {
  params.validate();
  GrayMap total(height, width);
  for (double s : params.scales) {
    const GrayMap layer = render_scale_layer(params, s, height, width);
    for (std::size_t i = 0; i < total.data.size(); ++i) total.data[i] += layer.data[i];
  }
  return total;
}

GrayMap render_rain(const RainParams& params, std::size_t height, std::size_t width) {
  GrayMap total = render_rain_unclamped(params, height, width);
  clamp_in_place(total);
  return total;
}

Image rain_to_image(const GrayMap& layer) { return gray_to_image(layer); }

double coverage_fraction(const GrayMap& layer) {
  if (layer.data.empty()) return 0.0;
  const auto lit = std::count_if(layer.data.begin(), layer.data.end(), [](double v) { return v > 0.0; });
  return static_cast<double>(lit) / static_cast<double>(layer.data.size());
}

}  // namespace stormforge
