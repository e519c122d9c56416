#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stormforge/scorer.hpp"

namespace stormforge {

// Deterministic stand-in for an image/text encoder pair. Images are area-
// downsampled to 32x32, flattened (row, column, channel) and projected by a
// seeded Gaussian matrix to 64 dims; prompts map to seeded Gaussian vectors.
// Both sides are L2-normalized, so scores are cosines.
class ToyEncoder {
 public:
  static constexpr std::size_t kGrid = 32;
  static constexpr std::size_t kInputDim = kGrid * kGrid * 3;
  static constexpr std::size_t kEmbedDim = 64;

  explicit ToyEncoder(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }
  const Eigen::MatrixXd& projection() const noexcept { return projection_; }

  Eigen::VectorXd downsample(const Image& img) const;
  Eigen::VectorXd embed_image(const Image& img) const;
  Eigen::VectorXd embed_text(const std::string& prompt) const;

 private:
  std::uint64_t seed_;
  Eigen::MatrixXd projection_;
};

ScoreVector toy_score(const Image& img, const ToyEncoder& encoder, const LabelSet& labels);

class ToyScorer final : public Scorer {
 public:
  ToyScorer(std::shared_ptr<const ToyEncoder> encoder, LabelSet labels);

  std::size_t label_count() const override { return labels_.size(); }
  std::string describe() const override;
  const ToyEncoder& encoder() const noexcept { return *encoder_; }
  const Eigen::MatrixXd& text_embeddings() const noexcept { return text_; }

 protected:
  ScoreVector do_score(const Image& img) override;

 private:
  std::shared_ptr<const ToyEncoder> encoder_;
  LabelSet labels_;
  Eigen::MatrixXd text_;  // one unit row per label
};

// FNV-1a over bytes; stable across platforms.
std::uint64_t stable_hash(const std::string& s, std::uint64_t basis = 14695981039346656037ULL);

}  // namespace stormforge
