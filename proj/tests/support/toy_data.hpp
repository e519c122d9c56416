#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stormforge/image.hpp"
#include "stormforge/scorer.hpp"
#include "stormforge/toy_encoder.hpp"

namespace fixture {

struct ToyImage {
  std::string id;
  std::size_t label = 0;
  stormforge::Image image;
};

// The committed data/toy8 set with its label file and encoder.
struct ToyData {
  stormforge::LabelSet labels;
  std::shared_ptr<const stormforge::ToyEncoder> encoder;
  std::vector<ToyImage> images;  // in file-name order
};

const ToyData& toy8();

}  // namespace fixture
