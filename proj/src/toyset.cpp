#include "stormforge/toyset.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <memory>

#include "stormforge/attack_json.hpp"
#include "stormforge/error.hpp"
#include "stormforge/png_io.hpp"
#include "stormforge/toy_encoder.hpp"

namespace stormforge {
namespace {

// P^T t_k as a 32x32x3 field scaled to unit max magnitude.
Eigen::VectorXd label_pattern(const ToyScorer& scorer, std::size_t k) {
  Eigen::VectorXd u = scorer.encoder().projection().transpose() * scorer.text_embeddings().row(k).transpose();
  return u / u.cwiseAbs().maxCoeff();
}

Image plant(std::size_t size, const Eigen::VectorXd& object, double a, const Eigen::VectorXd& background, double b) {
  const double centre = (static_cast<double>(size) - 1.0) / 2.0;
  const double radius = 0.3125 * static_cast<double>(size);
  std::vector<double> px(size * size * 3);
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      const bool inside = std::hypot(r - centre, c - centre) <= radius;
      const std::size_t cell = (r * ToyEncoder::kGrid / size * ToyEncoder::kGrid + c * ToyEncoder::kGrid / size) * 3;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const auto i = static_cast<Eigen::Index>(cell + ch);
        px[(r * size + c) * 3 + ch] = 0.5 + (inside ? a * object(i) : b * background(i));
      }
    }
  }
  return quantize_8bit(Image(size, size, std::move(px)));
}

}  // namespace

Toyset make_toyset(const ToysetOptions& options) {
  Toyset set;
  set.labels = LabelSet::from_template(options.labels, options.prompt_template);
  auto encoder = std::make_shared<const ToyEncoder>(options.encoder_seed);
  ToyScorer scorer(encoder, set.labels);
  const PyramidExtractor extractor;
  const std::size_t n = options.size;
  const Image rain_fix = rain_to_image(render_rain(options.stage1.rain, n, n));

  std::vector<Eigen::VectorXd> patterns;
  for (std::size_t k = 0; k < set.labels.size(); ++k) patterns.push_back(label_pattern(scorer, k));

  for (std::size_t y = 0; y < set.labels.size(); ++y) {
    ToyImage best;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < set.labels.size(); ++c) {
      if (c == y) continue;
      for (int ai = 1; ai <= 10; ++ai) {
        for (int bi = 0; bi <= 10; ++bi) {
          const double a = 0.05 * ai;
          const double b = 0.05 * bi;
          Image img = plant(n, patterns[y], a, patterns[c], b);
          const ScoreVector s = scorer.score(img);
          if (predict(s) != y) continue;
          const double margin = stage1_margin(s.span(), y);
          if (margin < options.min_margin || margin > options.max_margin) continue;
          double err = std::abs(margin - options.target_margin);
          if (err >= best_err) continue;

          const PerceptualFeatures feats = extract_features(extractor, img);
          const attack::Stage1Context ctx{img, rain_fix, scorer, y, extractor, feats};
          const double light = attack::stage1_objective(options.stage1.mixing_bounds.lo, ctx, options.stage1).total;
          const auto heavy_terms = attack::stage1_objective(options.stage1.mixing_bounds.hi, ctx, options.stage1);
          if (heavy_terms.margin <= options.min_heavy_margin) continue;
          const double heavy = heavy_terms.total;
          // Constructions where heavier rain helps the attack rank first.
          if (heavy >= light) err += 1.0;
          if (err >= best_err) continue;

          best_err = err;
          best.label = y;
          best.confuser = c;
          best.object_amplitude = a;
          best.background_amplitude = b;
          best.clean_margin = margin;
          best.objective_light = light;
          best.objective_heavy = heavy;
          best.image = std::move(img);
        }
      }
    }
    if (!std::isfinite(best_err)) {
      throw Error(Errc::kInvalidArgument, "no toy construction satisfies the constraints for label " + options.labels[y]);
    }
    best.file = std::to_string(y) + "_" + options.labels[y] + ".png";
    set.images.push_back(std::move(best));
  }
  return set;
}

void write_toyset(const Toyset& set, const std::filesystem::path& dir, std::uint64_t encoder_seed) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  Json annotations = Json::object();
  Json construction = Json::object();
  for (const auto& img : set.images) {
    save_png(img.image, dir / img.file);
    annotations[img.file] = set.labels.labels[img.label];
    construction[img.file] = {{"confuser", set.labels.labels[img.confuser]},
                              {"object_amplitude", img.object_amplitude},
                              {"background_amplitude", img.background_amplitude},
                              {"clean_margin", img.clean_margin}};
  }
  const Json doc{{"labels", set.labels.labels},
                 {"prompt_template", set.labels.prompt_template},
                 {"annotations", annotations},
                 {"toy_encoder_seed", encoder_seed},
                 {"construction", construction}};
  std::ofstream out(dir / "labels.json");
  if (!out) throw Error(Errc::kUnwritablePath, "cannot write " + (dir / "labels.json").string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error(Errc::kUnwritablePath, "cannot write " + (dir / "labels.json").string());
}

}  // namespace stormforge
