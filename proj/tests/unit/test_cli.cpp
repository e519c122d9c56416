#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

#include "oracles.hpp"
#include "stormforge/cli.hpp"
#include "stormforge/png_io.hpp"
#include "temp_dir.hpp"

using namespace stormforge;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + STORMFORGE_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string record(std::size_t y, std::size_t clean, std::size_t fin, bool success, const std::string& name) {
  nlohmann::json j{{"image_id", name + std::to_string(fin)}, {"true_label", y},      {"true_label_name", name},
                   {"clean_prediction", clean},              {"final_prediction", fin}, {"success", success},
                   {"failed", false},                        {"queries", 120u}};
  return j.dump();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("render with zero strength is the identity") {
    fixture::TempDir tmp;
    std::mt19937_64 rng(8);
    const Image img = quantize_8bit(oracle::random_image(40, 30, rng));
    save_png(img, tmp / "in.png");
    fixture::write_file(tmp / "p.json", R"({"mixing_weight": 0, "illumination": {"modulation": 0}})");
    const auto s = cli::render_file(tmp / "p.json", tmp / "in.png", tmp / "out.png");
    CHECK(load_png(tmp / "out.png") == img);
    CHECK(s.mean_gain == 1.0);
    CHECK(s.max_gain == 1.0);

    fixture::write_file(tmp / "q.json", R"({"rain": {"seed": 4}})");
    cli::render_file(tmp / "q.json", tmp / "in.png", tmp / "a.png");
    cli::render_file(tmp / "q.json", tmp / "in.png", tmp / "b.png");
    CHECK(fixture::read_file(tmp / "a.png") == fixture::read_file(tmp / "b.png"));
    CHECK(fixture::read_file(tmp / "a.png") != fixture::read_file(tmp / "in.png"));

    CHECK(run_cli("render --params " + (tmp / "q.json").string() + " --input " + (tmp / "in.png").string() +
                      " --output " + (tmp / "c.png").string(),
                  tmp / "log") == 0);
    CHECK(fixture::read_file(tmp / "log").find("rain_coverage=") != std::string::npos);
    fixture::write_file(tmp / "bad.json", R"({"mixing_weight": 2})");
    CHECK(run_cli("render --params " + (tmp / "bad.json").string() + " --input " + (tmp / "in.png").string() +
                      " --output " + (tmp / "c.png").string(),
                  tmp / "log") == 2);
    CHECK(run_cli("render --params " + (tmp / "q.json").string() + " --input " + (tmp / "none.png").string() +
                      " --output " + (tmp / "c.png").string(),
                  tmp / "log") == 1);
  }

  TEST_CASE("report tables") {
    fixture::TempDir tmp;
    const std::string jsonl = record(0, 0, 1, true, "cat") + "\n" + record(0, 0, 0, false, "cat") + "\n" +
                              "{broken\n" + record(1, 1, 0, true, "dog") + "\n" + record(1, 0, 1, false, "dog") +
                              "\n" + R"({"true_label": 1})" + "\n";
    fixture::write_file(tmp / "r.jsonl", jsonl);
    const auto st = cli::write_report(tmp / "r.jsonl", tmp / "rep");
    CHECK(st.skipped_lines == 2);
    CHECK(st.summary.images == 4);
    const std::string acc = fixture::read_file(tmp / "rep" / "accuracy.csv");
    CHECK(acc.find("success_rate_pct,50.0\n") != std::string::npos);
    CHECK(acc.find("clean_accuracy_pct,75.0\n") != std::string::npos);
    CHECK(acc.find("adversarial_accuracy_pct,50.0\n") != std::string::npos);
    const auto rows = lines_of(fixture::read_file(tmp / "rep" / "per_class.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[1] == "cat,2,2,1");
    CHECK(rows[2] == "dog,2,1,1");
    CHECK(fs::exists(tmp / "rep" / "objective_curves.svg"));
    CHECK(fs::exists(tmp / "rep" / "success_vs_queries.svg"));

    fixture::write_file(tmp / "empty.jsonl", "");
    const auto e = cli::write_report(tmp / "empty.jsonl", tmp / "rep2");
    CHECK(e.summary.images == 0);
    CHECK(fixture::read_file(tmp / "rep2" / "accuracy.csv").find("success_rate_pct,0.0") != std::string::npos);
    CHECK(run_cli("report --results " + (tmp / "nope.jsonl").string() + " --out " + (tmp / "x").string(),
                  tmp / "log") != 0);
  }

  TEST_CASE("attack on the toy set") {
    fixture::TempDir tmp;
    const std::string cfg = fixture::source_path("configs/toy_run.json").string();
    REQUIRE(run_cli("attack --config " + cfg + " --output-dir " + (tmp / "a").string(), tmp / "log") == 0);
    const std::string first = fixture::read_file(tmp / "a" / "results.jsonl");
    const auto recs = lines_of(first);
    CHECK(recs.size() == 8);
    const auto summary = nlohmann::json::parse(fixture::read_file(tmp / "a" / "summary.json"));
    CHECK(summary["adversarial_accuracy"].get<double>() <= summary["clean_accuracy"].get<double>());
    CHECK(fs::exists(tmp / "a" / "adv" / "0_airplane.png"));
    CHECK(fs::exists(tmp / "a" / "timings.csv"));
    const auto snapshot = nlohmann::json::parse(fixture::read_file(tmp / "a" / "config.json"));
    CHECK(snapshot["seed"] == 0);

    // Environment seed is overridden by the flag, so this rerun matches.
    REQUIRE(run_cli("attack --config " + cfg + " --seed 0 --workers 2 --output-dir " + (tmp / "b").string(),
                    tmp / "log") == 0);
    CHECK(fixture::read_file(tmp / "b" / "results.jsonl") == first);

    REQUIRE(run_cli("report --results " + (tmp / "a" / "results.jsonl").string() + " --out " +
                        (tmp / "rep").string(),
                    tmp / "log") == 0);
    CHECK(fs::exists(tmp / "rep" / "accuracy.csv"));
  }

  TEST_CASE("attack exit codes") {
    fixture::TempDir tmp;
    fs::create_directories(tmp / "data");
    fixture::write_file(tmp / "data" / "labels.json", R"({"labels": ["a", "b"], "annotations": {}})");
    fixture::write_file(tmp / "empty.json",
                        R"({"dataset_dir": "data", "label_file": "data/labels.json", "output_dir": "out"})");
    CHECK(run_cli("attack --config " + (tmp / "empty.json").string(), tmp / "log") == 2);
    CHECK(run_cli("attack --config " + (tmp / "missing.json").string(), tmp / "log") == 2);
    CHECK(run_cli("attack", tmp / "log") == 2);
    CHECK(run_cli("frobnicate", tmp / "log") == 2);

    const std::string toy = fixture::source_path("configs/toy_run.json").string();
    CHECK(run_cli("attack --config " + toy + " --endpoint http://127.0.0.1:9 --output-dir " + (tmp / "r").string(),
                  tmp / "log") == 3);
    CHECK(run_cli("scorer-check --endpoint http://127.0.0.1:9 --timeout 1", tmp / "log") == 3);
  }
}
