#include "stormforge/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stormforge/error.hpp"

namespace stormforge {

double clamp_unit(double v) noexcept {
  // NaN maps to 0 so the [0,1] invariant holds for any input.
  if (!(v > 0.0)) return 0.0;
  return v < 1.0 ? v : 1.0;
}

Image::Image(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), data_(height * width * kChannels, clamp_unit(fill)) {}

Image::Image(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (data_.size() != height * width * kChannels) {
    throw Error(Errc::kDimensionMismatch,
                "image data has " + std::to_string(data_.size()) + " values, expected " +
                    std::to_string(height * width * kChannels));
  }
  for (double& v : data_) v = clamp_unit(v);
}

void clamp_in_place(GrayMap& map, double lo, double hi) {
  for (double& v : map.data) v = std::clamp(v, lo, hi);
}

namespace {

void require_same_shape(const Image& a, const Image& b, const char* op) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error(Errc::kDimensionMismatch,
                std::string(op) + ": " + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                    " vs " + std::to_string(b.height()) + "x" + std::to_string(b.width()));
  }
}

}  // namespace

Image blend(const Image& a, const Image& b, double w) {
  require_same_shape(a, b, "blend");
  const auto da = a.data();
  const auto db = b.data();
  std::vector<double> out(da.size());
  const double keep = 1.0 - w;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = keep * da[i] + w * db[i];
  return Image(a.height(), a.width(), std::move(out));
}

Image apply_gain(const Image& img, const GrayMap& gain) {
  if (img.height() != gain.height || img.width() != gain.width) {
    throw Error(Errc::kDimensionMismatch,
                "apply_gain: image " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                    " vs gain " + std::to_string(gain.height) + "x" + std::to_string(gain.width));
  }
  const auto src = img.data();
  std::vector<double> out(src.size());
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    const double g = gain.data[p];
    for (std::size_t c = 0; c < Image::kChannels; ++c) {
      out[p * Image::kChannels + c] = src[p * Image::kChannels + c] * g;
    }
  }
  return Image(img.height(), img.width(), std::move(out));
}

GrayMap luma(const Image& img) {
  GrayMap out(img.height(), img.width());
  const auto src = img.data();
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    const double* px = &src[p * Image::kChannels];
    out.data[p] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
  }
  return out;
}

Image gray_to_image(const GrayMap& map) {
  std::vector<double> out(map.data.size() * Image::kChannels);
  for (std::size_t p = 0; p < map.data.size(); ++p) {
    out[p * 3] = out[p * 3 + 1] = out[p * 3 + 2] = map.data[p];
  }
  return Image(map.height, map.width, std::move(out));
}

}  // namespace stormforge
