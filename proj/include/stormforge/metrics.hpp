#pragma once

#include <cstddef>
#include <span>

#include "stormforge/image.hpp"

namespace stormforge {

struct SsimConstants {
  double c1 = 1e-4;  // (0.01 * D)^2 with D = 1
  double c2 = 9e-4;  // (0.03 * D)^2
  std::size_t window = 7;

  void validate() const;
};

// Mean SSIM over every fully contained window position of the luma planes,
// with uniform-window local statistics. ssim(a, a) == 1 exactly.
// Errors: kDimensionMismatch, kWindowTooLarge, kInvalidArgument.
double ssim(const Image& a, const Image& b, const SsimConstants& c = {});

// 1 - ssim(a, b).
double ssim_loss(const Image& a, const Image& b, const SsimConstants& c = {});

// S_y - max_{k != y} S_k. Positive while the true label still wins.
double stage1_margin(std::span<const double> scores, std::size_t true_label);

// max(0, delta - (max_{k != y} S_k - S_y)).
double stage2_hinge(std::span<const double> scores, std::size_t true_label, double delta);

// (w_p - w_p0)^2.
double stage1_weight_reg(double w_p, double w_p0);

}  // namespace stormforge
