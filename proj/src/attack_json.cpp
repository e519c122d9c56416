#include "stormforge/attack_json.hpp"

#include <utility>

#include "stormforge/error.hpp"

namespace stormforge {

FieldReader::FieldReader(const Json& object, std::string path) : object_(object), path_(std::move(path)) {
  if (!object_.is_object()) throw Error(Errc::kConfig, (path_.empty() ? "config" : path_) + " must be an object");
}

const Json* FieldReader::child(const char* key) {
  seen_.insert(key);
  const auto it = object_.find(key);
  if (it == object_.end()) return nullptr;
  return &*it;
}

std::string FieldReader::path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

void FieldReader::fail(const std::string& key, const std::string& what) const {
  throw Error(Errc::kConfig, path(key) + " " + what);
}

void FieldReader::finish() const {
  for (const auto& [key, value] : object_.items()) {
    if (!seen_.count(key)) fail(key, "is not a known field");
  }
}

namespace {

// Re-labels validation failures as config errors.
template <typename F>
void validate_as_config(const std::string& path, F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.code() != Errc::kInvalidArgument) throw;
    throw Error(Errc::kConfig, path + ": " + e.what());
  }
}

Json scores_json(const ScoreVector& s) { return Json(s.values); }

std::string label_name(const LabelSet* labels, std::size_t i) {
  if (labels && i < labels->size()) return labels->labels[i];
  return std::to_string(i);
}

}  // namespace

// ---------------------------------------------------------------------------

Json to_json(const RainParams& p) {
  return Json{{"intensity", p.intensity}, {"density", p.density},   {"length", p.length}, {"width", p.width},
              {"direction_deg", p.direction_deg}, {"blur", p.blur}, {"seed", p.seed},     {"scales", p.scales}};
}

RainParams rain_from_json(const Json& j, const std::string& path, RainParams base) {
  FieldReader r(j, path);
  r.read("intensity", base.intensity);
  r.read("density", base.density);
  r.read("length", base.length);
  r.read("width", base.width);
  r.read("direction_deg", base.direction_deg);
  if (const Json* b = r.child("blur")) {
    if (!b->is_number_integer()) r.fail("blur", "must be an odd integer");
    base.blur = b->get<int>();
  }
  r.read("seed", base.seed);
  r.read("scales", base.scales);
  r.finish();
  validate_as_config(path, [&] { base.validate(); });
  return base;
}

Json to_json(const IlluminationParams& p) {
  Json sources = Json::array();
  for (const auto& s : p.sources) {
    sources.push_back({{"x", s.x}, {"y", s.y}, {"strength", s.strength}, {"radius", s.radius}});
  }
  return Json{{"sources", sources},
              {"modulation", p.modulation},
              {"reference_gain", p.reference_gain},
              {"gain_threshold", p.gain_threshold}};
}

IlluminationParams illumination_from_json(const Json& j, const std::string& path, IlluminationParams base) {
  FieldReader r(j, path);
  if (const Json* arr = r.child("sources")) {
    if (!arr->is_array()) r.fail("sources", "must be an array");
    base.sources.clear();
    for (std::size_t i = 0; i < arr->size(); ++i) {
      FieldReader s((*arr)[i], r.path("sources[" + std::to_string(i) + "]"));
      LightSource src;
      s.read("x", src.x);
      s.read("y", src.y);
      s.read("strength", src.strength);
      s.read("radius", src.radius);
      s.finish();
      base.sources.push_back(src);
    }
  }
  r.read("modulation", base.modulation);
  r.read("reference_gain", base.reference_gain);
  r.read("gain_threshold", base.gain_threshold);
  r.finish();
  validate_as_config(path, [&] { base.validate(); });
  return base;
}

Json to_json(const SsimConstants& c) { return Json{{"c1", c.c1}, {"c2", c.c2}, {"window", c.window}}; }

// ---------------------------------------------------------------------------

Json to_json(const attack::Stage1Config& c) {
  return Json{{"mixing_bounds", {c.mixing_bounds.lo, c.mixing_bounds.hi}},
              {"lambda_perc", c.lambda_perc},
              {"lambda_reg", c.lambda_reg},
              {"anchor", c.anchor},
              {"budget", c.budget},
              {"rain", to_json(c.rain)}};
}

attack::Stage1Config stage1_from_json(const Json& j, const std::string& path, attack::Stage1Config base) {
  FieldReader r(j, path);
  std::vector<double> bounds;
  if (r.read("mixing_bounds", bounds)) {
    if (bounds.size() != 2) r.fail("mixing_bounds", "must hold exactly two numbers");
    base.mixing_bounds = {bounds[0], bounds[1]};
  }
  r.read("lambda_perc", base.lambda_perc);
  r.read("lambda_reg", base.lambda_reg);
  r.read("anchor", base.anchor);
  r.read("budget", base.budget);
  if (const Json* rain = r.child("rain")) base.rain = rain_from_json(*rain, r.path("rain"), base.rain);
  r.finish();
  validate_as_config(path, [&] { base.validate(); });
  return base;
}

Json to_json(const attack::Stage2Config& c) {
  return Json{{"delta", c.delta},
              {"lambda_perc", c.lambda_perc},
              {"lambda_real", c.lambda_real},
              {"lambda_light", c.lambda_light},
              {"lambda_range", c.lambda_range},
              {"top_k", c.top_k},
              {"lights", to_json(c.lights)},
              {"scales", c.scales},
              {"population", c.population},
              {"parents", c.parents},
              {"sigma0", c.sigma0},
              {"max_generations", c.max_generations},
              {"stop_penalty_tol", c.stop_penalty_tol},
              {"ssim", to_json(c.ssim)},
              {"eval_threads", c.eval_threads}};
}

attack::Stage2Config stage2_from_json(const Json& j, const std::string& path, attack::Stage2Config base) {
  FieldReader r(j, path);
  r.read("delta", base.delta);
  r.read("lambda_perc", base.lambda_perc);
  r.read("lambda_real", base.lambda_real);
  r.read("lambda_light", base.lambda_light);
  r.read("lambda_range", base.lambda_range);
  r.read("top_k", base.top_k);
  if (const Json* lights = r.child("lights")) {
    base.lights = illumination_from_json(*lights, r.path("lights"), base.lights);
  }
  r.read("scales", base.scales);
  r.read("population", base.population);
  r.read("parents", base.parents);
  r.read("sigma0", base.sigma0);
  r.read("max_generations", base.max_generations);
  r.read("stop_penalty_tol", base.stop_penalty_tol);
  if (const Json* s = r.child("ssim")) {
    FieldReader sr(*s, r.path("ssim"));
    sr.read("c1", base.ssim.c1);
    sr.read("c2", base.ssim.c2);
    sr.read("window", base.ssim.window);
    sr.finish();
  }
  r.read("eval_threads", base.eval_threads);
  r.finish();
  validate_as_config(path, [&] { base.validate(); });
  return base;
}

// ---------------------------------------------------------------------------

Json to_json(const attack::AttackResult& r, const LabelSet* labels) {
  const auto& s1 = r.stage1;
  const auto& s2 = r.stage2;

  Json evals = Json::array();
  for (const auto& [w, v] : s1.evaluations) evals.push_back({w, v});
  Json stage1{{"ok", s1.ok},
              {"w_p", s1.w_p},
              {"margin", s1.best.margin},
              {"hinge", 0.0},
              {"perceptual", s1.best.perceptual},
              {"reg", s1.best.reg},
              {"total", s1.best.total},
              {"prediction", s1.prediction},
              {"prediction_label", label_name(labels, s1.prediction)},
              {"scores", scores_json(s1.best.scores)},
              {"evaluations", evals}};
  stage1["hinge"] = s1.best.scores.values.empty()
                        ? 0.0
                        : stage2_hinge(s1.best.scores.span(), r.true_label, 0.0);
  if (!s1.ok) stage1["error"] = s1.error;

  Json history = Json::array();
  for (const auto& g : s2.history) {
    history.push_back({{"generation", g.generation},
                       {"best_phase_a", g.best_phase_a},
                       {"best_total", g.best_total},
                       {"mean_total", g.mean_total},
                       {"min_hinge", g.min_hinge},
                       {"topk_perceptual", g.topk_perceptual},
                       {"sigma", g.sigma},
                       {"best_so_far", g.best_so_far}});
  }
  Json events = Json::array();
  for (const auto& e : s2.events) {
    events.push_back({{"generation", e.generation}, {"kind", e.kind}, {"detail", e.detail}});
  }
  Json stage2{{"ran", s2.ran},
              {"ok", s2.ok},
              {"w_p", s2.w_p},
              {"generations", s2.generations},
              {"early_stopped", s2.early_stopped},
              {"failed_evaluations", s2.failed_evaluations},
              {"best_vector", s2.best_vector},
              {"rain", to_json(s2.best_params.rain)},
              {"lights", to_json(s2.best_params.lights)},
              {"losses",
               {{"hinge", s2.best.hinge},
                {"ssim_loss", s2.best.ssim_loss},
                {"light", s2.best.light},
                {"range", s2.best.range},
                {"phase_a", s2.best.phase_a},
                {"perceptual", s2.best.perceptual},
                {"total", s2.best.total}}},
              {"min_hinge", s2.min_hinge},
              {"prediction", s2.prediction},
              {"prediction_label", label_name(labels, s2.prediction)},
              {"scores", scores_json(s2.best.scores)},
              {"history", history},
              {"events", events}};
  if (!s2.ok) stage2["error"] = s2.error;

  Json out{{"image_id", r.image_id},
           {"true_label", r.true_label},
           {"true_label_name", r.true_label_name},
           {"seed", r.seed},
           {"clean_prediction", r.clean_prediction},
           {"clean_prediction_label", label_name(labels, r.clean_prediction)},
           {"clean_margin", r.clean_margin},
           {"clean_misclassified", r.clean_misclassified},
           {"clean_scores", scores_json(r.clean_scores)},
           {"stage1", stage1},
           {"stage2", stage2},
           {"final_prediction", r.final_prediction},
           {"final_prediction_label", label_name(labels, r.final_prediction)},
           {"success", r.success},
           {"queries", r.queries},
           {"failed", r.failed}};
  if (r.failed) out["error"] = r.error;
  return out;
}

}  // namespace stormforge
