#include "stormforge/perceptual.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "stormforge/error.hpp"

namespace stormforge {
namespace {

struct Plane {
  std::size_t h;
  std::size_t w;
  std::vector<double> v;
};

Plane blur_and_decimate(const Plane& in) {
  static constexpr std::array<double, 5> kTaps{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  const auto clampi = [](long i, std::size_t n) {
    return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(n) - 1));
  };
  std::vector<double> tmp(in.v.size());
  for (std::size_t r = 0; r < in.h; ++r) {
    for (std::size_t c = 0; c < in.w; ++c) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k) acc += kTaps[k + 2] * in.v[r * in.w + clampi(static_cast<long>(c) + k, in.w)];
      tmp[r * in.w + c] = acc;
    }
  }
  Plane out{(in.h + 1) / 2, (in.w + 1) / 2, {}};
  out.v.resize(out.h * out.w);
  for (std::size_t r = 0; r < out.h; ++r) {
    for (std::size_t c = 0; c < out.w; ++c) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k) acc += kTaps[k + 2] * tmp[clampi(static_cast<long>(2 * r) + k, in.h) * in.w + 2 * c];
      out.v[r * out.w + c] = acc;
    }
  }
  return out;
}

}  // namespace

PyramidExtractor::PyramidExtractor(std::size_t levels) : levels_(levels) {
  if (levels_ < 2) throw Error(Errc::kInvalidArgument, "pyramid extractor needs at least two levels");
}

PerceptualFeatures PyramidExtractor::extract(const Image& img) const {
  if (img.empty()) throw Error(Errc::kExtractorFailure, "empty image");
  std::array<Plane, 4> planes;
  for (auto& p : planes) p = {img.height(), img.width(), std::vector<double>(img.pixel_count())};
  const auto src = img.data();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const double r = src[3 * i], g = src[3 * i + 1], b = src[3 * i + 2];
    planes[0].v[i] = 0.299 * r + 0.587 * g + 0.114 * b;
    planes[1].v[i] = r;
    planes[2].v[i] = g;
    planes[3].v[i] = b;
  }

  PerceptualFeatures out;
  for (std::size_t level = 0; level < levels_; ++level) {
    if (level > 0) {
      for (auto& p : planes) p = blur_and_decimate(p);
    }
    std::vector<double> feat;
    feat.reserve(planes.size() * planes[0].v.size());
    for (const auto& p : planes) feat.insert(feat.end(), p.v.begin(), p.v.end());
    out.level_names.push_back("pyramid_" + std::to_string(level));
    out.levels.push_back(std::move(feat));
  }
  return out;
}

PerceptualFeatures extract_features(const FeatureExtractor& extractor, const Image& img) {
  try {
    return extractor.extract(img);
  } catch (const Error& e) {
    if (e.code() == Errc::kExtractorFailure) throw;
    throw Error(Errc::kExtractorFailure, extractor.name() + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(Errc::kExtractorFailure, extractor.name() + ": " + e.what());
  }
}

double perceptual_distance(const PerceptualFeatures& a, const PerceptualFeatures& b) {
  if (a.levels.size() < 2 || a.levels.size() != b.levels.size()) {
    throw Error(Errc::kExtractorFailure, "feature level count mismatch or fewer than two levels");
  }
  double total = 0.0;
  for (std::size_t l = 0; l < a.levels.size(); ++l) {
    const auto& fa = a.levels[l];
    const auto& fb = b.levels[l];
    if (fa.size() != fb.size() || fa.empty()) {
      throw Error(Errc::kExtractorFailure, "feature level " + std::to_string(l) + " size mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
      const double d = fa[i] - fb[i];
      acc += d * d;
    }
    total += acc / static_cast<double>(fa.size());
  }
  return total;
}

double perceptual_distance(const Image& a, const Image& b, const FeatureExtractor& extractor) {
  return perceptual_distance(extract_features(extractor, a), extract_features(extractor, b));
}

}  // namespace stormforge
