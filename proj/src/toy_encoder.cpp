#include "stormforge/toy_encoder.hpp"

#include <algorithm>
#include <random>

namespace stormforge {

std::uint64_t stable_hash(const std::string& s, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

ToyEncoder::ToyEncoder(std::uint64_t seed) : seed_(seed), projection_(kEmbedDim, kInputDim) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index r = 0; r < projection_.rows(); ++r) {
    for (Eigen::Index c = 0; c < projection_.cols(); ++c) projection_(r, c) = normal(rng);
  }
}

Eigen::VectorXd ToyEncoder::downsample(const Image& img) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(kInputDim));
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  for (std::size_t i = 0; i < kGrid; ++i) {
    const std::size_t r0 = i * h / kGrid;
    const std::size_t r1 = std::max(r0 + 1, (i + 1) * h / kGrid);
    for (std::size_t j = 0; j < kGrid; ++j) {
      const std::size_t c0 = j * w / kGrid;
      const std::size_t c1 = std::max(c0 + 1, (j + 1) * w / kGrid);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        double acc = 0.0;
        for (std::size_t r = r0; r < r1; ++r) {
          for (std::size_t c = c0; c < c1; ++c) acc += img.at(r, c, ch);
        }
        out(static_cast<Eigen::Index>((i * kGrid + j) * 3 + ch)) = acc / static_cast<double>((r1 - r0) * (c1 - c0));
      }
    }
  }
  return out;
}

Eigen::VectorXd ToyEncoder::embed_image(const Image& img) const {
  Eigen::VectorXd x = downsample(img);
  for (Eigen::Index ch = 0; ch < 3; ++ch) {
    auto plane = Eigen::Map<Eigen::VectorXd, 0, Eigen::InnerStride<3>>(x.data() + ch, x.size() / 3);
    plane.array() -= plane.mean();
  }
  Eigen::VectorXd e = projection_ * x;
  const double n = e.norm();
  return n > 0.0 ? Eigen::VectorXd(e / n) : e;
}

Eigen::VectorXd ToyEncoder::embed_text(const std::string& prompt) const {
  std::mt19937_64 rng(stable_hash(prompt) ^ (seed_ * 0x9E3779B97F4A7C15ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd t(static_cast<Eigen::Index>(kEmbedDim));
  for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = normal(rng);
  return t / t.norm();
}

namespace {

Eigen::MatrixXd text_matrix(const ToyEncoder& encoder, const LabelSet& labels) {
  Eigen::MatrixXd text(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(ToyEncoder::kEmbedDim));
  for (std::size_t k = 0; k < labels.size(); ++k) {
    text.row(static_cast<Eigen::Index>(k)) = encoder.embed_text(labels.prompts[k]).transpose();
  }
  return text;
}

ScoreVector cosine_scores(const Eigen::MatrixXd& text, const Eigen::VectorXd& embedding) {
  const Eigen::VectorXd s = text * embedding;
  return {std::vector<double>(s.data(), s.data() + s.size())};
}

}  // namespace

ScoreVector toy_score(const Image& img, const ToyEncoder& encoder, const LabelSet& labels) {
  return cosine_scores(text_matrix(encoder, labels), encoder.embed_image(img));
}

ToyScorer::ToyScorer(std::shared_ptr<const ToyEncoder> encoder, LabelSet labels)
    : encoder_(std::move(encoder)), labels_(std::move(labels)) {
  labels_.validate();
  text_ = text_matrix(*encoder_, labels_);
}

std::string ToyScorer::describe() const { return "toy(seed=" + std::to_string(encoder_->seed()) + ")"; }

ScoreVector ToyScorer::do_score(const Image& img) { return cosine_scores(text_, encoder_->embed_image(img)); }

}  // namespace stormforge
