#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stormforge/cmaes.hpp"
#include "stormforge/illumination.hpp"
#include "stormforge/image.hpp"
#include "stormforge/metrics.hpp"
#include "stormforge/perceptual.hpp"
#include "stormforge/rain.hpp"
#include "stormforge/scorer.hpp"

namespace stormforge::attack {

// ---------------------------------------------------------------------------
// Configuration

struct Stage1Config {
  Interval mixing_bounds{0.02, 0.7};
  double lambda_perc = 1e-2;
  double lambda_reg = 1e-1;
  double anchor = 0.02;  // w_p0
  RainParams rain;       // the fixed global rain layer
  std::size_t budget = 20;

  void validate() const;
};

struct Stage2Config {
  double delta = 0.05;
  double lambda_perc = 1e-2;
  double lambda_real = 1e-1;
  double lambda_light = 1e-1;
  double lambda_range = 1e-1;
  std::size_t top_k = 5;

  // Starting illumination; its source count fixes the search dimension and
  // its modulation / reference / threshold stay frozen during the search.
  IlluminationParams lights = default_illumination();
  // Scale stack used for Stage-2 rain; {1.0} disables the multi-scale path.
  std::vector<double> scales{1.0, 0.5, 0.25};

  std::size_t population = 15;
  std::size_t parents = 0;
  double sigma0 = 0.3;
  std::size_t max_generations = 60;
  // Early stop once the generation's best candidate has a zero hinge and both
  // illumination penalties at or below this value.
  double stop_penalty_tol = 1e-3;
  SsimConstants ssim;
  // Threads evaluating the candidates of one generation.
  std::size_t eval_threads = 1;

  std::size_t dimension() const noexcept { return 6 + 4 * lights.sources.size(); }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Stage 1

struct Stage1Terms {
  double w_p = 0.0;
  double margin = 0.0;      // attack term
  double perceptual = 0.0;
  double reg = 0.0;
  double total = 0.0;
  ScoreVector scores;
};

// Everything the Stage-1 objective needs besides w_p.
struct Stage1Context {
  const Image& clean;
  const Image& rain_layer;  // R_fix broadcast to RGB
  Scorer& scorer;
  std::size_t true_label;
  const FeatureExtractor& extractor;
  const PerceptualFeatures& clean_features;
};

Stage1Terms stage1_objective(double w_p, const Stage1Context& ctx, const Stage1Config& cfg);

struct ScalarSearchResult {
  double best_x = 0.0;
  double best_value = 0.0;
  std::size_t best_index = 0;
  std::vector<std::pair<double, double>> evaluations;  // (x, value) in call order
};

// 9-point uniform grid over `bounds`, then golden-section refinement of the
// bracket around the best grid point until `budget` evaluations are spent.
// Requires budget >= 10.
ScalarSearchResult grid_golden_search(const std::function<double(double)>& f, Interval bounds, std::size_t budget,
                                      std::size_t grid_points = 9);

struct Stage1Report {
  bool ok = true;
  std::string error;
  double w_p = 0.0;
  Stage1Terms best;
  std::size_t prediction = 0;
  std::vector<std::pair<double, double>> evaluations;
};

// On scorer failure the stage is marked failed and w_p falls back to the anchor.
Stage1Report run_stage1(const Stage1Context& ctx, const Stage1Config& cfg);

// ---------------------------------------------------------------------------
// Stage 2

struct Stage2Params {
  RainParams rain;
  IlluminationParams lights;
};

// Candidate layout: [intensity, density, length, width, direction, blur,
// (x, y, strength, radius) per light]. Blur is rounded to the nearest odd
// kernel size on decode.
std::vector<Interval> stage2_bounds(std::size_t light_count);
Eigen::VectorXd encode_candidate(const Stage2Params& params);
Stage2Params decode_candidate(const Eigen::VectorXd& v, const Stage2Config& cfg, const RainParams& rain_template);

// blend(clean, rain, w_p) then the illumination gain.
Image stage2_compose(const Image& clean, double w_p, const RainParams& rain, const IlluminationParams& lights);

struct Stage2Terms {
  double hinge = 0.0;
  double ssim_loss = 0.0;
  double light = 0.0;  // (mean G - G0)^2
  double range = 0.0;  // max(0, max G - Gthr)
  double phase_a = 0.0;
  double perceptual = 0.0;  // meaningful only for Top-K candidates
  double total = 0.0;
  ScoreVector scores;
};

struct PhaseAResult {
  Stage2Terms terms;
  Image composed;
};

// Composes the candidate and scores the attack term plus the low-level
// realism penalties; the perceptual term is left for apply_top_k.
PhaseAResult stage2_phase_a(const Stage2Params& params, double w_p, const Image& clean, Scorer& scorer,
                            std::size_t true_label, const Stage2Config& cfg);

struct TopKOutcome {
  std::vector<double> totals;
  std::vector<std::size_t> selected;          // Top-K indices, best first
  std::vector<std::optional<double>> perceptual;
};

// Ranks by phase-A value, computes `perceptual(i)` for the K best only and adds
// it with weight lambda. The rest receive lambda times the largest Top-K
// distance, which keeps every Top-K candidate ranked ahead of them.
TopKOutcome apply_top_k(const std::vector<double>& phase_a, std::size_t k, double lambda,
                        const std::function<double(std::size_t)>& perceptual);

struct Stage2Generation {
  std::size_t generation = 0;
  double best_phase_a = 0.0;
  double best_total = 0.0;
  double mean_total = 0.0;
  double min_hinge = 0.0;
  double topk_perceptual = 0.0;  // mean perceptual distance over the Top-K
  double sigma = 0.0;
  double best_so_far = 0.0;
};

struct Stage2Report {
  bool ran = false;
  bool ok = true;
  std::string error;
  double w_p = 0.0;
  std::vector<double> best_vector;
  Stage2Params best_params;
  Stage2Terms best;
  double min_hinge = 0.0;
  std::size_t prediction = 0;
  std::size_t generations = 0;
  bool early_stopped = false;
  std::size_t failed_evaluations = 0;
  std::vector<Stage2Generation> history;
  cmaes::StrategyParameters strategy;
  std::vector<cmaes::Event> events;
};

// ---------------------------------------------------------------------------
// End to end

struct AttackResult {
  std::string image_id;
  std::size_t true_label = 0;
  std::string true_label_name;
  std::uint64_t seed = 0;
  std::size_t clean_prediction = 0;
  ScoreVector clean_scores;
  double clean_margin = 0.0;
  bool clean_misclassified = false;
  Stage1Report stage1;
  Stage2Report stage2;
  std::size_t final_prediction = 0;
  bool success = false;
  std::uint64_t queries = 0;
  double wall_time_s = 0.0;
  bool failed = false;
  std::string error;
};

struct AttackOutcome {
  AttackResult result;
  Image adversarial;
};

struct AttackOptions {
  std::string image_id;
  std::uint64_t seed = 0;  // drives the CMA-ES sampling stream
  const FeatureExtractor* extractor = nullptr;  // defaults to the pyramid surrogate
};

// Clean prediction, Stage 1, then Stage 2 with w_p frozen. Never throws for
// scorer or per-stage failures; those are recorded in the result.
AttackOutcome run_attack(const Image& clean, std::size_t true_label, Scorer& scorer, const LabelSet& labels,
                         const Stage1Config& s1, const Stage2Config& s2, const AttackOptions& options);

}  // namespace stormforge::attack
