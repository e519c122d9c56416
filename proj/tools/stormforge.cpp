#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stormforge/cli.hpp"
#include "stormforge/error.hpp"
#include "stormforge/toyset.hpp"

namespace fs = std::filesystem;
using namespace stormforge;

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("STORMFORGE_SEED");
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t used = 0;
    const auto seed = std::stoull(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument(v);
    return seed;
  } catch (const std::exception&) {
    throw Error(Errc::kConfig, std::string("STORMFORGE_SEED is not an unsigned integer: ") + v);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box two-stage rain attack engine"};
  app.require_subcommand(1);

  auto* render = app.add_subcommand("render", "Compose rain and illumination onto one image");
  std::string params, input, output;
  render->add_option("--params", params, "Render params JSON")->required();
  render->add_option("--input", input, "Input PNG")->required();
  render->add_option("--output", output, "Output PNG")->required();

  auto* attack = app.add_subcommand("attack", "Attack every image of a dataset");
  std::string config_file;
  std::optional<std::string> dataset_dir, label_file, output_dir, endpoint;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed, toy_seed;
  attack->add_option("--config", config_file, "Run config JSON")->required();
  attack->add_option("--dataset-dir", dataset_dir, "Override dataset_dir");
  attack->add_option("--label-file", label_file, "Override label_file");
  attack->add_option("--output-dir", output_dir, "Override output_dir");
  attack->add_option("--workers", workers, "Override workers");
  attack->add_option("--seed", seed, "Override the global seed");
  attack->add_option("--toy-seed", toy_seed, "Use the toy scorer with this encoder seed");
  attack->add_option("--endpoint", endpoint, "Use the remote scorer at this endpoint");

  auto* report = app.add_subcommand("report", "Tables and plots from results.jsonl");
  std::string results, report_dir;
  report->add_option("--results", results, "results.jsonl")->required();
  report->add_option("--out", report_dir, "Output directory")->required();

  auto* check = app.add_subcommand("scorer-check", "Ping a remote scorer and validate the protocol");
  std::string check_endpoint, check_labels;
  bool check_features = false;
  int check_timeout = 10;
  check->add_option("--endpoint", check_endpoint, "Scorer base URL")->required();
  check->add_option("--labels", check_labels, "Label file (defaults to two placeholder labels)");
  check->add_flag("--features", check_features, "Also exercise the features endpoint");
  check->add_option("--timeout", check_timeout, "Request timeout in seconds");

  auto* toyset = app.add_subcommand("make-toyset", "Generate the synthetic labelled image set");
  std::string toy_out;
  std::uint64_t encoder_seed = ToysetOptions{}.encoder_seed;
  toyset->add_option("--out", toy_out, "Output directory")->required();
  toyset->add_option("--encoder-seed", encoder_seed, "Toy encoder seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitConfig;
  }

  try {
    if (*render) return cli::cmd_render(params, input, output, std::cout);

    if (*attack) {
      cli::RunConfig cfg;
      try {
        cfg = cli::load_run_config(config_file);
        if (dataset_dir) cfg.dataset_dir = *dataset_dir;
        if (label_file) cfg.label_file = *label_file;
        if (output_dir) cfg.output_dir = *output_dir;
        if (workers) cfg.workers = *workers;
        if (const auto s = env_seed()) cfg.seed = *s;
        if (seed) cfg.seed = *seed;
        if (toy_seed) {
          cfg.scorer.kind = cli::ScorerChoice::Kind::kToy;
          cfg.scorer.toy_seed = *toy_seed;
        }
        if (endpoint) {
          cfg.scorer.kind = cli::ScorerChoice::Kind::kRemote;
          cfg.scorer.remote.endpoint = *endpoint;
        }
      } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return cli::kExitConfig;
      }
      return cli::cmd_attack(cfg, std::cerr);
    }

    if (*report) return cli::cmd_report(results, report_dir, std::cout);

    if (*check) {
      LabelSet labels = LabelSet::from_template({"cat", "dog"}, "a photo of a {}.");
      if (!check_labels.empty()) labels = cli::load_label_file(check_labels).labels;
      RemoteOptions opt;
      opt.endpoint = check_endpoint;
      opt.timeout = std::chrono::seconds(check_timeout);
      return cli::cmd_scorer_check(opt, labels, check_features, std::cout);
    }

    if (*toyset) {
      ToysetOptions opt;
      opt.encoder_seed = encoder_seed;
      const Toyset set = make_toyset(opt);
      write_toyset(set, toy_out, encoder_seed);
      for (const auto& img : set.images) {
        std::cout << img.file << " margin=" << img.clean_margin << '\n';
      }
      return cli::kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == Errc::kConfig ? cli::kExitConfig : cli::kExitFailure;
  }
  return cli::kExitFailure;
}
