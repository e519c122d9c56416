#pragma once

#include <string>
#include <vector>

#include "stormforge/image.hpp"

namespace stormforge {

// Multi-level feature responses of one image.
struct PerceptualFeatures {
  std::vector<std::string> level_names;
  std::vector<std::vector<double>> levels;
};

// Abstract multi-level feature extractor. Implementations must be safe to call
// concurrently and must return the same level layout for same-sized inputs.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual PerceptualFeatures extract(const Image& img) const = 0;
  virtual std::string name() const = 0;
};

// Built-in surrogate: a 4-level Gaussian pyramid (binomial 5-tap blur,
// replicate border, 2x decimation). Each level contributes its luma plane and
// the three colour planes as local-mean features.
class PyramidExtractor final : public FeatureExtractor {
 public:
  explicit PyramidExtractor(std::size_t levels = 4);
  PerceptualFeatures extract(const Image& img) const override;
  std::string name() const override { return "pyramid"; }

 private:
  std::size_t levels_;
};

// Sum over levels of the squared Euclidean feature distance, each level
// divided by its element count. Errors: kExtractorFailure.
double perceptual_distance(const PerceptualFeatures& a, const PerceptualFeatures& b);
double perceptual_distance(const Image& a, const Image& b, const FeatureExtractor& extractor);

// Calls extractor.extract, mapping any failure to kExtractorFailure.
PerceptualFeatures extract_features(const FeatureExtractor& extractor, const Image& img);

}  // namespace stormforge
