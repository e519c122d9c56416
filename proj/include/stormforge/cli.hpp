#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stormforge/attack.hpp"
#include "stormforge/attack_json.hpp"
#include "stormforge/remote_scorer.hpp"
#include "stormforge/scorer.hpp"

namespace stormforge::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitUnreachable = 3,
};

struct ScorerChoice {
  enum class Kind { kToy, kRemote };
  Kind kind = Kind::kToy;
  std::uint64_t toy_seed = 9;
  RemoteOptions remote;
  bool remote_features = false;  // perceptual features from the sidecar too
};

struct RunConfig {
  fs::path dataset_dir;
  fs::path label_file;
  ScorerChoice scorer;
  attack::Stage1Config stage1;
  attack::Stage2Config stage2;
  std::size_t workers = 1;
  fs::path output_dir;
  std::uint64_t seed = 0;

  // Field-precise kConfig errors; checks that the input paths exist.
  void validate() const;
};

// Relative paths resolve against `base_dir`.
RunConfig run_config_from_json(const Json& j, const fs::path& base_dir);
RunConfig load_run_config(const fs::path& file);
Json to_json(const RunConfig& c);

// {"labels": [...], "prompt_template": "...", "annotations": {"file.png": "label"}}
struct LabelFile {
  LabelSet labels;
  std::vector<std::pair<std::string, std::size_t>> images;  // sorted by file name
};
LabelFile load_label_file(const fs::path& path);

std::uint64_t job_seed(std::uint64_t global_seed, const std::string& image_id);

// Opens the configured scorer; remote sessions are established eagerly so an
// unreachable sidecar fails before any work (kTransport).
std::unique_ptr<Scorer> make_scorer(const ScorerChoice& choice, const LabelSet& labels);

struct RunSummary {
  std::size_t images = 0;
  std::size_t clean_correct = 0;
  std::size_t adversarial_correct = 0;
  std::size_t successes = 0;
  std::size_t failed = 0;
  double clean_accuracy = 0.0;
  double adversarial_accuracy = 0.0;
  double success_rate = 0.0;
  double mean_queries = 0.0;
};

// Computed from JSONL records alone. Records missing a required field throw
// kProtocol.
RunSummary summarize(const std::vector<Json>& records);
Json to_json(const RunSummary& s);

// Writes results.jsonl, adv/<id>.png, config.json, summary.json and
// timings.csv under the output directory.
int cmd_attack(const RunConfig& config, std::ostream& log);

struct RenderStats {
  double mean_gain = 0.0;
  double max_gain = 0.0;
  double rain_coverage = 0.0;
};

// Params file: {"mixing_weight": w, "rain": {...}, "illumination": {...}}.
RenderStats render_file(const fs::path& params_file, const fs::path& input, const fs::path& output);
int cmd_render(const fs::path& params_file, const fs::path& input, const fs::path& output, std::ostream& out);

struct ReportStats {
  RunSummary summary;
  std::size_t skipped_lines = 0;
};

// Emits accuracy.csv, per_class.csv, objective_curves.svg and
// success_vs_queries.svg.
ReportStats write_report(const fs::path& results, const fs::path& out_dir);
int cmd_report(const fs::path& results, const fs::path& out_dir, std::ostream& out);

// Opens a session, scores a gray and a random image, optionally fetches
// features, and checks every reply against the protocol.
int cmd_scorer_check(const RemoteOptions& options, const LabelSet& labels, bool check_features, std::ostream& out);

}  // namespace stormforge::cli
