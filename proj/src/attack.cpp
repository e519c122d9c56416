#include "stormforge/attack.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "stormforge/error.hpp"

namespace stormforge::attack {
namespace {

constexpr double kInvPhi = 0.6180339887498949;  // 1 / golden ratio

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::kInvalidArgument, what);
}

bool nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

void Stage1Config::validate() const {
  require(std::isfinite(mixing_bounds.lo) && std::isfinite(mixing_bounds.hi) && mixing_bounds.lo < mixing_bounds.hi &&
              mixing_bounds.lo >= 0.0 && mixing_bounds.hi <= 1.0,
          "stage1.mixing_bounds must satisfy 0 <= lo < hi <= 1");
  require(nonneg(lambda_perc), "stage1.lambda_perc must be >= 0");
  require(nonneg(lambda_reg), "stage1.lambda_reg must be >= 0");
  require(std::isfinite(anchor) && anchor >= 0.0 && anchor <= 1.0, "stage1.anchor must lie in [0, 1]");
  require(budget >= 10, "stage1.budget must be >= 10");
  rain.validate();
}

void Stage2Config::validate() const {
  require(nonneg(delta), "stage2.delta must be >= 0");
  require(nonneg(lambda_perc), "stage2.lambda_perc must be >= 0");
  require(nonneg(lambda_real), "stage2.lambda_real must be >= 0");
  require(nonneg(lambda_light), "stage2.lambda_light must be >= 0");
  require(nonneg(lambda_range), "stage2.lambda_range must be >= 0");
  require(population >= 4, "stage2.population must be >= 4");
  require(top_k >= 1 && top_k <= population, "stage2.top_k must lie in [1, population]");
  require(max_generations >= 1, "stage2.max_generations must be >= 1");
  require(nonneg(stop_penalty_tol), "stage2.stop_penalty_tol must be >= 0");
  require(eval_threads >= 1, "stage2.eval_threads must be >= 1");
  lights.validate();
  for (const auto& s : lights.sources) {
    require(LightBounds::kPosition.contains(s.x) && LightBounds::kPosition.contains(s.y),
            "stage2.lights source position outside [0, 1]");
  }
  RainParams probe;
  probe.scales = scales;
  probe.validate();
  ssim.validate();
}

// ---------------------------------------------------------------------------
// Stage 1

Stage1Terms stage1_objective(double w_p, const Stage1Context& ctx, const Stage1Config& cfg) {
  const Image mixed = blend(ctx.clean, ctx.rain_layer, w_p);
  Stage1Terms t;
  t.w_p = w_p;
  t.scores = ctx.scorer.score(mixed);
  t.margin = stage1_margin(t.scores.span(), ctx.true_label);
  // The clean image is its own zero-distance reference.
  t.perceptual = w_p == 0.0 ? 0.0 : perceptual_distance(extract_features(ctx.extractor, mixed), ctx.clean_features);
  t.reg = stage1_weight_reg(w_p, cfg.anchor);
  t.total = t.margin + cfg.lambda_perc * t.perceptual + cfg.lambda_reg * t.reg;
  return t;
}

ScalarSearchResult grid_golden_search(const std::function<double(double)>& f, Interval bounds, std::size_t budget,
                                      std::size_t grid_points) {
  require(grid_points >= 2, "grid search needs at least two points");
  require(budget > grid_points, "scalar search budget must exceed the grid size");
  require(bounds.lo < bounds.hi, "scalar search bounds must be ordered");

  ScalarSearchResult out;
  out.best_value = std::numeric_limits<double>::infinity();
  auto eval = [&](double x) {
    const double v = f(x);
    out.evaluations.emplace_back(x, v);
    if (v < out.best_value) {
      out.best_value = v;
      out.best_x = x;
      out.best_index = out.evaluations.size() - 1;
    }
    return v;
  };

  const double step = bounds.width() / static_cast<double>(grid_points - 1);
  std::vector<double> grid(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i) {
    grid[i] = i + 1 == grid_points ? bounds.hi : bounds.lo + step * static_cast<double>(i);
    eval(grid[i]);
  }
  const std::size_t best = out.best_index;
  double a = grid[best == 0 ? 0 : best - 1];
  double b = grid[std::min(best + 1, grid_points - 1)];

  std::size_t remaining = budget - grid_points;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = eval(c);
  --remaining;
  if (remaining == 0) return out;
  double fd = eval(d);
  --remaining;
  while (remaining > 0) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = eval(d);
    }
    --remaining;
  }
  return out;
}

Stage1Report run_stage1(const Stage1Context& ctx, const Stage1Config& cfg) {
  Stage1Report report;
  std::vector<Stage1Terms> terms;
  try {
    const auto search = grid_golden_search(
        [&](double w) {
          terms.push_back(stage1_objective(w, ctx, cfg));
          return terms.back().total;
        },
        cfg.mixing_bounds, cfg.budget);
    report.w_p = search.best_x;
    report.best = terms[search.best_index];
    report.evaluations = search.evaluations;
    report.prediction = predict(report.best.scores);
  } catch (const Error& e) {
    report.ok = false;
    report.error = e.what();
    report.w_p = cfg.anchor;
    for (const auto& t : terms) report.evaluations.emplace_back(t.w_p, t.total);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Stage 2

std::vector<Interval> stage2_bounds(std::size_t light_count) {
  const auto rain = RainBounds::all();
  std::vector<Interval> out(rain.begin(), rain.end());
  for (std::size_t i = 0; i < light_count; ++i) {
    out.push_back(LightBounds::kPosition);
    out.push_back(LightBounds::kPosition);
    out.push_back(LightBounds::kStrength);
    out.push_back(LightBounds::kRadius);
  }
  return out;
}

Eigen::VectorXd encode_candidate(const Stage2Params& p) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(6 + 4 * p.lights.sources.size()));
  v << p.rain.intensity, p.rain.density, p.rain.length, p.rain.width, p.rain.direction_deg,
      static_cast<double>(p.rain.blur), Eigen::VectorXd::Zero(v.size() - 6);
  for (std::size_t i = 0; i < p.lights.sources.size(); ++i) {
    const auto& s = p.lights.sources[i];
    const auto o = static_cast<Eigen::Index>(6 + 4 * i);
    v(o) = s.x;
    v(o + 1) = s.y;
    v(o + 2) = s.strength;
    v(o + 3) = s.radius;
  }
  return v;
}

Stage2Params decode_candidate(const Eigen::VectorXd& v, const Stage2Config& cfg, const RainParams& rain_template) {
  const std::size_t lights = cfg.lights.sources.size();
  require(v.size() == static_cast<Eigen::Index>(6 + 4 * lights), "candidate length does not match the light count");
  const auto bounds = stage2_bounds(lights);
  auto at = [&](std::size_t i) { return std::clamp(v(static_cast<Eigen::Index>(i)), bounds[i].lo, bounds[i].hi); };

  Stage2Params p;
  p.rain = rain_template;
  p.rain.scales = cfg.scales;
  p.rain.intensity = at(0);
  p.rain.density = at(1);
  p.rain.length = at(2);
  p.rain.width = at(3);
  p.rain.direction_deg = at(4);
  p.rain.blur = std::clamp(nearest_odd_kernel(at(5)), static_cast<int>(RainBounds::kBlur.lo),
                           static_cast<int>(RainBounds::kBlur.hi));
  p.lights = cfg.lights;
  for (std::size_t i = 0; i < lights; ++i) {
    auto& s = p.lights.sources[i];
    s.x = at(6 + 4 * i);
    s.y = at(7 + 4 * i);
    s.strength = at(8 + 4 * i);
    s.radius = at(9 + 4 * i);
  }
  return p;
}

namespace {

struct Composite {
  Image image;
  GainStats gain;
};

Composite compose_with_stats(const Image& clean, double w_p, const RainParams& rain, const IlluminationParams& lights) {
  const Image rainy = blend(clean, rain_to_image(render_rain(rain, clean.height(), clean.width())), w_p);
  const GrayMap gain = gain_map(lights, clean.height(), clean.width());
  return {apply_gain(rainy, gain), gain_stats(gain)};
}

}  // namespace

Image stage2_compose(const Image& clean, double w_p, const RainParams& rain, const IlluminationParams& lights) {
  return compose_with_stats(clean, w_p, rain, lights).image;
}

PhaseAResult stage2_phase_a(const Stage2Params& params, double w_p, const Image& clean, Scorer& scorer,
                            std::size_t true_label, const Stage2Config& cfg) {
  Composite comp = compose_with_stats(clean, w_p, params.rain, params.lights);
  PhaseAResult out{{}, std::move(comp.image)};
  Stage2Terms& t = out.terms;
  t.scores = scorer.score(out.composed);
  t.hinge = stage2_hinge(t.scores.span(), true_label, cfg.delta);
  t.ssim_loss = ssim_loss(out.composed, clean, cfg.ssim);
  const auto pen = illumination_penalties(comp.gain, params.lights.reference_gain, params.lights.gain_threshold);
  t.light = pen.global;
  t.range = pen.range;
  t.phase_a = t.hinge + cfg.lambda_real * t.ssim_loss + cfg.lambda_light * t.light + cfg.lambda_range * t.range;
  t.total = t.phase_a;
  return out;
}

TopKOutcome apply_top_k(const std::vector<double>& phase_a, std::size_t k, double lambda,
                        const std::function<double(std::size_t)>& perceptual) {
  const std::size_t n = phase_a.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return phase_a[a] < phase_a[b]; });

  TopKOutcome out;
  out.totals = phase_a;
  out.perceptual.assign(n, std::nullopt);
  if (lambda == 0.0) return out;

  double worst = 0.0;
  for (std::size_t r = 0; r < std::min(k, n); ++r) {
    const std::size_t i = order[r];
    if (!std::isfinite(phase_a[i])) break;
    const double d = perceptual(i);
    out.perceptual[i] = d;
    out.selected.push_back(i);
    worst = std::max(worst, d);
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.totals[i] += lambda * (out.perceptual[i] ? *out.perceptual[i] : worst);
  }
  return out;
}

// ---------------------------------------------------------------------------
// End to end

namespace {

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

struct Stage2Candidate {
  bool ok = false;
  Stage2Params params;
  Stage2Terms terms;
  Image composed;
};

Stage2Report run_stage2(const Image& clean, std::size_t y, double w_p, Scorer& scorer, const Stage1Config& s1,
                        const Stage2Config& s2, const FeatureExtractor& extractor,
                        const PerceptualFeatures& clean_features, std::uint64_t seed, Image& adversarial) {
  Stage2Report rep;
  rep.ran = true;
  rep.w_p = w_p;
  rep.min_hinge = std::numeric_limits<double>::infinity();

  Stage2Params start{s1.rain, s2.lights};
  start.rain.scales = s2.scales;
  const auto bounds = stage2_bounds(s2.lights.sources.size());
  cmaes::Config cc;
  cc.dimension = s2.dimension();
  cc.population = s2.population;
  cc.parents = s2.parents;
  cc.sigma0 = s2.sigma0;
  cc.max_generations = s2.max_generations;
  cc.seed = seed;
  for (const auto& b : bounds) {
    cc.lower.push_back(b.lo);
    cc.upper.push_back(b.hi);
  }
  const Eigen::VectorXd x0 = encode_candidate(start);
  cc.initial_mean.assign(x0.data(), x0.data() + x0.size());

  cmaes::Optimizer opt(cc);
  rep.strategy = opt.parameters();
  Stage2Candidate best;
  double best_total = std::numeric_limits<double>::infinity();

  for (std::size_t g = 0; g < s2.max_generations; ++g) {
    const auto& xs = opt.ask();
    std::vector<Stage2Candidate> cands(xs.size());
    std::vector<double> phase_a(xs.size(), std::numeric_limits<double>::infinity());
    std::vector<std::string> errors(xs.size());
    auto evaluate = [&](std::size_t i) {
      cands[i].params = decode_candidate(xs[i], s2, s1.rain);
      try {
        auto ev = stage2_phase_a(cands[i].params, w_p, clean, scorer, y, s2);
        cands[i].terms = std::move(ev.terms);
        cands[i].composed = std::move(ev.composed);
        cands[i].ok = true;
        phase_a[i] = cands[i].terms.phase_a;
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    };
    parallel_for(xs.size(), s2.eval_threads, evaluate);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (cands[i].ok) {
        rep.min_hinge = std::min(rep.min_hinge, cands[i].terms.hinge);
      } else {
        ++rep.failed_evaluations;
        rep.error = errors[i];
      }
    }
    const auto finite = std::count_if(phase_a.begin(), phase_a.end(), [](double v) { return std::isfinite(v); });
    if (finite == 0) {
      rep.ok = false;
      rep.error = "every candidate of generation " + std::to_string(g) + " failed: " + rep.error;
      break;
    }

    const TopKOutcome topk = apply_top_k(phase_a, s2.top_k, s2.lambda_perc, [&](std::size_t i) {
      return perceptual_distance(extract_features(extractor, cands[i].composed), clean_features);
    });

    // Failed candidates rank behind every finite one.
    std::vector<double> totals = topk.totals;
    double worst_finite = -std::numeric_limits<double>::infinity();
    for (double v : totals) {
      if (std::isfinite(v)) worst_finite = std::max(worst_finite, v);
    }
    Stage2Generation rec;
    rec.generation = g;
    rec.best_phase_a = *std::min_element(phase_a.begin(), phase_a.end());
    rec.min_hinge = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    std::size_t gen_best = 0;
    for (std::size_t i = 0; i < totals.size(); ++i) {
      if (!std::isfinite(totals[i])) {
        totals[i] = worst_finite + 1.0;
        continue;
      }
      cands[i].terms.perceptual = topk.perceptual[i].value_or(0.0);
      cands[i].terms.total = totals[i];
      sum += totals[i];
      rec.min_hinge = std::min(rec.min_hinge, cands[i].terms.hinge);
      if (totals[i] < totals[gen_best] || !cands[gen_best].ok) gen_best = i;
    }
    double topk_sum = 0.0;
    for (std::size_t i : topk.selected) topk_sum += *topk.perceptual[i];
    rec.topk_perceptual = topk.selected.empty() ? 0.0 : topk_sum / static_cast<double>(topk.selected.size());
    rec.best_total = totals[gen_best];
    rec.mean_total = sum / static_cast<double>(finite);

    const bool stop = cands[gen_best].terms.hinge == 0.0 && cands[gen_best].terms.light <= s2.stop_penalty_tol &&
                      cands[gen_best].terms.range <= s2.stop_penalty_tol;
    if (totals[gen_best] < best_total) {
      best_total = totals[gen_best];
      best = std::move(cands[gen_best]);
      rep.best_vector.assign(xs[gen_best].data(), xs[gen_best].data() + xs[gen_best].size());
    }
    opt.tell(totals);
    rec.sigma = opt.sigma();
    rec.best_so_far = best_total;
    rep.history.push_back(rec);
    rep.generations = g + 1;

    if (stop) {
      rep.early_stopped = true;
      break;
    }
  }

  rep.events = opt.events();
  if (best.ok) {
    rep.best_params = best.params;
    rep.best = best.terms;
    rep.prediction = predict(best.terms.scores);
    adversarial = std::move(best.composed);
  } else if (rep.ok) {
    rep.ok = false;
    rep.error = "no successful stage-2 evaluation";
  }
  if (!std::isfinite(rep.min_hinge)) rep.min_hinge = 0.0;
  return rep;
}

}  // namespace

AttackOutcome run_attack(const Image& clean, std::size_t true_label, Scorer& shared_scorer, const LabelSet& labels,
                         const Stage1Config& s1, const Stage2Config& s2, const AttackOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  AttackOutcome out;
  AttackResult& r = out.result;
  r.image_id = options.image_id;
  r.true_label = true_label;
  r.seed = options.seed;
  out.adversarial = clean;

  CountingScorer scorer(shared_scorer);
  const PyramidExtractor fallback_extractor;
  const FeatureExtractor& extractor = options.extractor ? *options.extractor : fallback_extractor;

  try {
    require(true_label < labels.size(), "true label index out of range");
    r.true_label_name = labels.labels[true_label];
    s1.validate();
    s2.validate();

    r.clean_scores = scorer.score(clean);
    r.clean_prediction = predict(r.clean_scores);
    r.clean_margin = stage1_margin(r.clean_scores.span(), true_label);
    r.clean_misclassified = r.clean_prediction != true_label;
    r.final_prediction = r.clean_prediction;

    const PerceptualFeatures clean_features = extract_features(extractor, clean);
    const Image rain_fix = rain_to_image(render_rain(s1.rain, clean.height(), clean.width()));
    const Stage1Context ctx{clean, rain_fix, scorer, true_label, extractor, clean_features};
    r.stage1 = run_stage1(ctx, s1);
    if (r.stage1.ok) r.final_prediction = r.stage1.prediction;

    r.stage2 = run_stage2(clean, true_label, r.stage1.w_p, scorer, s1, s2, extractor, clean_features, options.seed,
                          out.adversarial);
    if (r.stage2.ok) {
      r.final_prediction = r.stage2.prediction;
    } else {
      r.failed = true;
      r.error = r.stage2.error;
    }
    if (!r.stage1.ok) {
      r.failed = true;
      r.error = r.stage1.error + (r.error.empty() ? "" : "; " + r.error);
    }
  } catch (const Error& e) {
    r.failed = true;
    r.error = e.what();
  }
  r.success = !r.failed && r.final_prediction != true_label;
  r.queries = scorer.query_count();
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

}  // namespace stormforge::attack
