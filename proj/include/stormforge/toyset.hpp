#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stormforge/attack.hpp"
#include "stormforge/image.hpp"
#include "stormforge/scorer.hpp"

namespace stormforge {

// Synthetic labelled images the toy scorer can classify and rain can fool.
// Each image is mid-gray with the planted label's encoder pattern inside a
// central disk and a weaker confuser pattern outside it. Amplitudes and the
// confuser are picked by exhaustive search so the 8-bit image is classified
// correctly with a small margin and heavy rain lowers the Stage-1 objective.
struct ToysetOptions {
  std::vector<std::string> labels{"airplane", "banana", "bear", "bed", "bird", "boat", "broccoli", "bus"};
  std::string prompt_template = "a photo of a {}.";
  std::uint64_t encoder_seed = 9;
  std::size_t size = 64;
  double target_margin = 0.06;
  double min_margin = 0.02;
  double max_margin = 0.1;
  // Full-strength Stage-1 rain must not push the margin to or below this, so
  // Stage 1 alone leaves work for Stage 2.
  double min_heavy_margin = -0.04;
  attack::Stage1Config stage1;
};

struct ToyImage {
  std::string file;
  std::size_t label = 0;
  std::size_t confuser = 0;
  double object_amplitude = 0.0;
  double background_amplitude = 0.0;
  double clean_margin = 0.0;
  double objective_light = 0.0;  // Stage-1 objective at the lower mixing bound
  double objective_heavy = 0.0;  // and at the upper bound
  Image image;                   // already quantized to 8 bits
};

struct Toyset {
  LabelSet labels;
  std::vector<ToyImage> images;
};

// Errors: kInvalidArgument when some label admits no valid construction.
Toyset make_toyset(const ToysetOptions& options);

// Writes <file>.png per image plus labels.json.
void write_toyset(const Toyset& set, const std::filesystem::path& dir, std::uint64_t encoder_seed);

}  // namespace stormforge
