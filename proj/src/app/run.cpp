#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include <fmt/core.h>

#include "stormforge/cli.hpp"
#include "stormforge/error.hpp"
#include "stormforge/png_io.hpp"

namespace stormforge::cli {
namespace {

struct Job {
  std::string file;
  std::string id;
  std::size_t label = 0;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(Errc::kUnwritablePath, "cannot write " + path.string());
}

std::size_t require_size(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    throw Error(Errc::kProtocol, std::string("result record lacks an unsigned \"") + key + "\"");
  }
  return it->get<std::size_t>();
}

bool require_bool(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_boolean()) {
    throw Error(Errc::kProtocol, std::string("result record lacks a boolean \"") + key + "\"");
  }
  return it->get<bool>();
}

}  // namespace

RunSummary summarize(const std::vector<Json>& records) {
  RunSummary s;
  double queries = 0.0;
  for (const auto& r : records) {
    const std::size_t y = require_size(r, "true_label");
    s.clean_correct += require_size(r, "clean_prediction") == y;
    s.adversarial_correct += require_size(r, "final_prediction") == y;
    s.successes += require_bool(r, "success");
    s.failed += require_bool(r, "failed");
    queries += static_cast<double>(require_size(r, "queries"));
    ++s.images;
  }
  if (s.images > 0) {
    const auto n = static_cast<double>(s.images);
    s.clean_accuracy = static_cast<double>(s.clean_correct) / n;
    s.adversarial_accuracy = static_cast<double>(s.adversarial_correct) / n;
    s.success_rate = static_cast<double>(s.successes) / n;
    s.mean_queries = queries / n;
  }
  return s;
}

Json to_json(const RunSummary& s) {
  return Json{{"images", s.images},
              {"clean_correct", s.clean_correct},
              {"adversarial_correct", s.adversarial_correct},
              {"successes", s.successes},
              {"failed", s.failed},
              {"clean_accuracy", s.clean_accuracy},
              {"adversarial_accuracy", s.adversarial_accuracy},
              {"success_rate", s.success_rate},
              {"mean_queries", s.mean_queries}};
}

int cmd_attack(const RunConfig& config, std::ostream& log) {
  LabelFile labels;
  std::vector<Job> jobs;
  try {
    config.validate();
    labels = load_label_file(config.label_file);
    for (const auto& [file, label] : labels.images) {
      if (!fs::is_regular_file(config.dataset_dir / file)) {
        throw Error(Errc::kConfig, "annotated image missing from dataset_dir: " + file);
      }
      jobs.push_back({file, fs::path(file).stem().string(), label});
    }
    if (jobs.empty()) throw Error(Errc::kConfig, "dataset is empty: no annotated images in " + config.dataset_dir.string());
  } catch (const Error& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  std::unique_ptr<Scorer> scorer;
  std::unique_ptr<FeatureExtractor> features;
  try {
    scorer = make_scorer(config.scorer, labels.labels);
    if (config.scorer.kind == ScorerChoice::Kind::kRemote && config.scorer.remote_features) {
      features = std::make_unique<RemoteFeatureExtractor>(config.scorer.remote);
    }
  } catch (const Error& e) {
    log << "scorer unavailable: " << e.what() << '\n';
    return e.code() == Errc::kTransport ? kExitUnreachable : kExitFailure;
  }

  std::error_code ec;
  fs::create_directories(config.output_dir / "adv", ec);
  if (ec) {
    log << "cannot create " << config.output_dir.string() << ": " << ec.message() << '\n';
    return kExitFailure;
  }

  std::vector<attack::AttackResult> results(jobs.size());
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      attack::AttackOptions opt;
      opt.image_id = job.id;
      opt.seed = job_seed(config.seed, job.id);
      opt.extractor = features.get();
      attack::AttackResult& r = results[i];
      try {
        const Image clean = load_png(config.dataset_dir / job.file);
        auto outcome = attack::run_attack(clean, job.label, *scorer, labels.labels, config.stage1, config.stage2, opt);
        r = std::move(outcome.result);
        save_png(outcome.adversarial, config.output_dir / "adv" / (job.id + ".png"));
      } catch (const Error& e) {
        r.image_id = job.id;
        r.true_label = job.label;
        r.true_label_name = labels.labels.labels[job.label];
        r.seed = opt.seed;
        r.failed = true;
        r.error = e.what();
      }
      std::lock_guard lock(log_mutex);
      log << fmt::format("[{}/{}] {} label={} success={} queries={}{}\n", i + 1, jobs.size(), job.id,
                         r.true_label_name, r.success, r.queries, r.failed ? " FAILED: " + r.error : "");
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(config.workers, jobs.size()); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  try {
    std::string jsonl;
    std::string timings = "image_id,wall_time_s\n";
    std::vector<Json> records;
    for (const auto& r : results) {
      records.push_back(stormforge::to_json(r, &labels.labels));
      jsonl += records.back().dump() + '\n';
      timings += fmt::format("{},{:.6f}\n", r.image_id, r.wall_time_s);
    }
    write_text(config.output_dir / "results.jsonl", jsonl);
    write_text(config.output_dir / "timings.csv", timings);
    write_text(config.output_dir / "config.json", to_json(config).dump(2) + '\n');
    const RunSummary summary = summarize(records);
    write_text(config.output_dir / "summary.json", to_json(summary).dump(2) + '\n');
    log << fmt::format("clean accuracy {:.1f}%  adversarial accuracy {:.1f}%  success rate {:.1f}%  mean queries {:.1f}\n",
                       100.0 * summary.clean_accuracy, 100.0 * summary.adversarial_accuracy,
                       100.0 * summary.success_rate, summary.mean_queries);
  } catch (const Error& e) {
    log << "cannot write results: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace stormforge::cli
