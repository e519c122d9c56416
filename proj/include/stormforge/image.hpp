#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace stormforge {

// H x W x 3 image, row-major, interleaved channels. Every stored intensity is
// in [0, 1]; the constructors clamp.
class Image {
 public:
  static constexpr std::size_t kChannels = 3;

  Image() = default;
  Image(std::size_t height, std::size_t width, double fill = 0.0);
  // Takes ownership of `data` (length must be height * width * 3) and clamps it.
  Image(std::size_t height, std::size_t width, std::vector<double> data);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t pixel_count() const noexcept { return height_ * width_; }
  bool empty() const noexcept { return data_.empty(); }

  double at(std::size_t row, std::size_t col, std::size_t channel) const {
    return data_[(row * width_ + col) * kChannels + channel];
  }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

// Single-channel scalar field (rain layers, illumination and gain maps).
// Values are unbounded until explicitly clamped.
struct GrayMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  GrayMap() = default;
  GrayMap(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), data(h * w, fill) {}

  double& at(std::size_t row, std::size_t col) { return data[row * width + col]; }
  double at(std::size_t row, std::size_t col) const { return data[row * width + col]; }

  friend bool operator==(const GrayMap&, const GrayMap&) = default;
};

double clamp_unit(double v) noexcept;

void clamp_in_place(GrayMap& map, double lo = 0.0, double hi = 1.0);

// (1 - w) * a + w * b, clamped. Exact at w = 0 and w = 1.
Image blend(const Image& a, const Image& b, double w);

// out[y, x, c] = clamp(img[y, x, c] * gain[y, x]).
Image apply_gain(const Image& img, const GrayMap& gain);

// Rec. 601 luma of every pixel.
GrayMap luma(const Image& img);

// Broadcast a gray field into all three channels.
Image gray_to_image(const GrayMap& map);

}  // namespace stormforge
