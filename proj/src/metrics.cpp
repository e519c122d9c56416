#include "stormforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "stormforge/error.hpp"

namespace stormforge {
namespace {

// Summed-area table with a zero border row and column.
struct Integral {
  std::size_t stride;
  std::vector<double> sum;

  Integral(const std::vector<double>& v, std::size_t h, std::size_t w) : stride(w + 1), sum((h + 1) * (w + 1), 0.0) {
    for (std::size_t r = 0; r < h; ++r) {
      double row = 0.0;
      for (std::size_t c = 0; c < w; ++c) {
        row += v[r * w + c];
        sum[(r + 1) * stride + c + 1] = sum[r * stride + c + 1] + row;
      }
    }
  }

  double box(std::size_t r, std::size_t c, std::size_t n) const {
    return sum[(r + n) * stride + c + n] - sum[r * stride + c + n] - sum[(r + n) * stride + c] + sum[r * stride + c];
  }
};

double best_rival(std::span<const double> scores, std::size_t true_label) {
  if (scores.size() < 2) throw Error(Errc::kInvalidArgument, "margin needs at least two labels");
  if (true_label >= scores.size()) {
    throw Error(Errc::kInvalidArgument, "true label " + std::to_string(true_label) + " out of range");
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (k != true_label) best = std::max(best, scores[k]);
  }
  return best;
}

}  // namespace

void SsimConstants::validate() const {
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw Error(Errc::kInvalidArgument, "ssim constants must be positive");
  if (window < 3 || window % 2 == 0) throw Error(Errc::kInvalidArgument, "ssim window must be odd and >= 3");
}

double ssim(const Image& a, const Image& b, const SsimConstants& c) {
  c.validate();
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error(Errc::kDimensionMismatch, "ssim operands differ in size");
  }
  const std::size_t h = a.height();
  const std::size_t w = a.width();
  const std::size_t n = c.window;
  if (n > h || n > w) throw Error(Errc::kWindowTooLarge, "ssim window exceeds image");

  const GrayMap la = luma(a);
  const GrayMap lb = luma(b);
  std::vector<double> aa(la.data.size()), bb(la.data.size()), ab(la.data.size());
  for (std::size_t i = 0; i < aa.size(); ++i) {
    aa[i] = la.data[i] * la.data[i];
    bb[i] = lb.data[i] * lb.data[i];
    ab[i] = la.data[i] * lb.data[i];
  }
  const Integral sa(la.data, h, w), sb(lb.data, h, w), saa(aa, h, w), sbb(bb, h, w), sab(ab, h, w);

  const double inv = 1.0 / static_cast<double>(n * n);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r + n <= h; ++r) {
    for (std::size_t col = 0; col + n <= w; ++col) {
      const double mu_a = sa.box(r, col, n) * inv;
      const double mu_b = sb.box(r, col, n) * inv;
      const double var_a = saa.box(r, col, n) * inv - mu_a * mu_a;
      const double var_b = sbb.box(r, col, n) * inv - mu_b * mu_b;
      const double cov = sab.box(r, col, n) * inv - mu_a * mu_b;
      const double num = (2.0 * mu_a * mu_b + c.c1) * (2.0 * cov + c.c2);
      const double den = (mu_a * mu_a + mu_b * mu_b + c.c1) * (var_a + var_b + c.c2);
      total += num / den;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double ssim_loss(const Image& a, const Image& b, const SsimConstants& c) { return 1.0 - ssim(a, b, c); }

double stage1_margin(std::span<const double> scores, std::size_t true_label) {
  const double rival = best_rival(scores, true_label);
  return scores[true_label] - rival;
}

double stage2_hinge(std::span<const double> scores, std::size_t true_label, double delta) {
  if (!(delta >= 0.0)) throw Error(Errc::kInvalidArgument, "hinge margin delta must be >= 0");
  const double rival = best_rival(scores, true_label);
  return std::max(0.0, delta - (rival - scores[true_label]));
}

double stage1_weight_reg(double w_p, double w_p0) {
  const double d = w_p - w_p0;
  return d * d;
}

}  // namespace stormforge
