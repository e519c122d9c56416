#include <algorithm>
#include <fstream>
#include <sstream>

#include "stormforge/cli.hpp"
#include "stormforge/error.hpp"
#include "stormforge/toy_encoder.hpp"

namespace stormforge::cli {
namespace {

Json read_json_file(const fs::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kConfig, std::string(what) + " not found: " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kConfig, std::string(what) + " " + path.string() + " is not valid JSON: " + e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

ScorerChoice scorer_from_json(const Json& j, const std::string& path) {
  FieldReader r(j, path);
  ScorerChoice c;
  std::string kind = "toy";
  r.read("kind", kind);
  if (kind == "toy") {
    c.kind = ScorerChoice::Kind::kToy;
  } else if (kind == "remote") {
    c.kind = ScorerChoice::Kind::kRemote;
  } else {
    r.fail("kind", "must be \"toy\" or \"remote\", got \"" + kind + "\"");
  }
  r.read("toy_seed", c.toy_seed);
  r.read("endpoint", c.remote.endpoint);
  int timeout_s = static_cast<int>(c.remote.timeout.count());
  if (r.read("timeout_s", timeout_s)) {
    if (timeout_s <= 0) r.fail("timeout_s", "must be > 0");
    c.remote.timeout = std::chrono::seconds(timeout_s);
  }
  r.read("max_retries", c.remote.retry.max_retries);
  if (c.remote.retry.max_retries < 0) r.fail("max_retries", "must be >= 0");
  int delay_ms = static_cast<int>(c.remote.retry.base_delay.count());
  if (r.read("retry_base_delay_ms", delay_ms)) {
    if (delay_ms < 0) r.fail("retry_base_delay_ms", "must be >= 0");
    c.remote.retry.base_delay = std::chrono::milliseconds(delay_ms);
  }
  r.read("remote_features", c.remote_features);
  r.finish();
  if (c.kind == ScorerChoice::Kind::kRemote && c.remote.endpoint.empty()) {
    r.fail("endpoint", "is required for the remote scorer");
  }
  return c;
}

Json to_json(const ScorerChoice& c) {
  if (c.kind == ScorerChoice::Kind::kToy) return Json{{"kind", "toy"}, {"toy_seed", c.toy_seed}};
  return Json{{"kind", "remote"},
              {"endpoint", c.remote.endpoint},
              {"timeout_s", c.remote.timeout.count()},
              {"max_retries", c.remote.retry.max_retries},
              {"retry_base_delay_ms", c.remote.retry.base_delay.count()},
              {"remote_features", c.remote_features}};
}

}  // namespace

void RunConfig::validate() const {
  if (dataset_dir.empty()) throw Error(Errc::kConfig, "dataset_dir is required");
  if (!fs::is_directory(dataset_dir)) throw Error(Errc::kConfig, "dataset_dir is not a directory: " + dataset_dir.string());
  if (label_file.empty()) throw Error(Errc::kConfig, "label_file is required");
  if (!fs::is_regular_file(label_file)) throw Error(Errc::kConfig, "label_file not found: " + label_file.string());
  if (output_dir.empty()) throw Error(Errc::kConfig, "output_dir is required");
  if (workers < 1) throw Error(Errc::kConfig, "workers must be >= 1");
  if (scorer.kind == ScorerChoice::Kind::kRemote && scorer.remote.endpoint.empty()) {
    throw Error(Errc::kConfig, "scorer.endpoint is required for the remote scorer");
  }
  try {
    stage1.validate();
    stage2.validate();
  } catch (const Error& e) {
    throw Error(Errc::kConfig, e.what());
  }
}

RunConfig run_config_from_json(const Json& j, const fs::path& base_dir) {
  FieldReader r(j, "");
  RunConfig c;
  std::string s;
  if (r.read("dataset_dir", s)) c.dataset_dir = resolve(base_dir, s);
  if (r.read("label_file", s)) c.label_file = resolve(base_dir, s);
  if (r.read("output_dir", s)) c.output_dir = resolve(base_dir, s);
  if (const Json* sc = r.child("scorer")) c.scorer = scorer_from_json(*sc, "scorer");
  if (const Json* s1 = r.child("stage1")) c.stage1 = stage1_from_json(*s1, "stage1");
  if (const Json* s2 = r.child("stage2")) c.stage2 = stage2_from_json(*s2, "stage2");
  r.read("workers", c.workers);
  r.read("seed", c.seed);
  r.finish();
  return c;
}

RunConfig load_run_config(const fs::path& file) {
  return run_config_from_json(read_json_file(file, "run config"), file.parent_path());
}

Json to_json(const RunConfig& c) {
  return Json{{"dataset_dir", c.dataset_dir.string()},
              {"label_file", c.label_file.string()},
              {"output_dir", c.output_dir.string()},
              {"scorer", to_json(c.scorer)},
              {"stage1", stormforge::to_json(c.stage1)},
              {"stage2", stormforge::to_json(c.stage2)},
              {"workers", c.workers},
              {"seed", c.seed}};
}

LabelFile load_label_file(const fs::path& path) {
  const Json j = read_json_file(path, "label file");
  FieldReader r(j, "");
  std::vector<std::string> names;
  std::string tmpl = "a photo of a {}.";
  Json annotations = Json::object();
  if (!r.read("labels", names) || names.empty()) r.fail("labels", "must be a nonempty array of strings");
  r.read("prompt_template", tmpl);
  r.read("annotations", annotations);
  // Generator metadata is carried along but not interpreted.
  r.child("toy_encoder_seed");
  r.child("construction");
  r.finish();

  LabelFile out;
  try {
    out.labels = LabelSet::from_template(std::move(names), std::move(tmpl));
    out.labels.validate();
  } catch (const Error& e) {
    throw Error(Errc::kConfig, std::string("label file: ") + e.what());
  }
  if (!annotations.is_object()) r.fail("annotations", "must map file names to labels");
  for (const auto& [file, label] : annotations.items()) {
    if (!label.is_string()) r.fail("annotations." + file, "must be a label name");
    const auto& names_ref = out.labels.labels;
    const auto it = std::find(names_ref.begin(), names_ref.end(), label.get<std::string>());
    if (it == names_ref.end()) r.fail("annotations." + file, "names unknown label \"" + label.get<std::string>() + "\"");
    out.images.emplace_back(file, static_cast<std::size_t>(it - names_ref.begin()));
  }
  std::sort(out.images.begin(), out.images.end());
  return out;
}

std::uint64_t job_seed(std::uint64_t global_seed, const std::string& image_id) {
  return splitmix64(global_seed ^ stable_hash(image_id));
}

std::unique_ptr<Scorer> make_scorer(const ScorerChoice& choice, const LabelSet& labels) {
  if (choice.kind == ScorerChoice::Kind::kToy) {
    return std::make_unique<ToyScorer>(std::make_shared<const ToyEncoder>(choice.toy_seed), labels);
  }
  auto remote = std::make_unique<RemoteScorer>(choice.remote, labels);
  remote->connect();
  return remote;
}

}  // namespace stormforge::cli
