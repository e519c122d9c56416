#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

#include <fmt/core.h>

#include "stormforge/cli.hpp"
#include "stormforge/error.hpp"

namespace stormforge::cli {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kPad = 50.0;

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  double map(double v, double from, double to) const {
    return hi > lo ? from + (v - lo) / (hi - lo) * (to - from) : (from + to) / 2.0;
  }
};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string svg_open(const std::string& title, const std::string& xlabel, const std::string& ylabel, Axis x,
                     Axis y) {
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{3}</text>\n"
      "<line x1=\"{4}\" y1=\"{5}\" x2=\"{6}\" y2=\"{5}\" stroke=\"black\"/>\n"
      "<line x1=\"{4}\" y1=\"{7}\" x2=\"{4}\" y2=\"{5}\" stroke=\"black\"/>\n"
      "<text x=\"{2}\" y=\"{8}\" text-anchor=\"middle\" font-size=\"12\">{9}</text>\n"
      "<text x=\"14\" y=\"{10}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 {10})\">{11}</text>\n",
      kWidth, kHeight, kWidth / 2, escape(title), kPad, kHeight - kPad, kWidth - kPad, kPad, kHeight - 12,
      escape(xlabel), kHeight / 2, escape(ylabel));
  s += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\">{:.3g}</text>\n", kPad, kHeight - kPad + 14, x.lo);
  s += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{:.3g}</text>\n", kWidth - kPad,
                   kHeight - kPad + 14, x.hi);
  s += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{:.3g}</text>\n", kPad - 4,
                   kHeight - kPad, y.lo);
  s += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{:.3g}</text>\n", kPad - 4,
                   kPad + 4, y.hi);
  return s;
}

Axis fit(const std::vector<double>& values) {
  if (values.empty()) return {};
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, *hi};
}

const char* colour(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return palette[i % 8];
}

std::string objective_svg(const std::vector<Series>& curves) {
  std::vector<double> xs, ys;
  for (const auto& c : curves) {
    for (const auto& [x, y] : c.points) {
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  const Axis ax = fit(xs);
  const Axis ay = fit(ys);
  std::string s = svg_open("Stage-2 best objective per generation", "generation", "best objective", ax, ay);
  for (std::size_t i = 0; i < curves.size(); ++i) {
    std::string pts;
    for (const auto& [x, y] : curves[i].points) {
      pts += fmt::format("{:.2f},{:.2f} ", ax.map(x, kPad, kWidth - kPad), ay.map(y, kHeight - kPad, kPad));
    }
    s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" points=\"{}\"><title>{}</title></polyline>\n", colour(i),
                     pts, escape(curves[i].name));
  }
  return s + "</svg>\n";
}

std::string scatter_svg(const std::vector<std::tuple<std::string, double, bool>>& points) {
  std::vector<double> xs;
  for (const auto& p : points) xs.push_back(std::get<1>(p));
  const Axis ax = fit(xs);
  const Axis ay{0.0, 1.0};
  std::string s = svg_open("Attack success vs queries", "queries", "success (1) / failure (0)", ax, ay);
  for (const auto& [name, q, ok] : points) {
    s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"{}\"><title>{}</title></circle>\n",
                     ax.map(q, kPad, kWidth - kPad), ay.map(ok ? 1.0 : 0.0, kHeight - kPad, kPad),
                     ok ? "#2ca02c" : "#d62728", escape(name));
  }
  return s + "</svg>\n";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(Errc::kUnwritablePath, "cannot write " + path.string());
}

std::string pct(double v) { return fmt::format("{:.1f}", 100.0 * v); }

}  // namespace

ReportStats write_report(const fs::path& results, const fs::path& out_dir) {
  std::ifstream in(results);
  if (!in) throw Error(Errc::kFileNotFound, "results file not found: " + results.string());

  ReportStats stats;
  std::vector<Json> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Json j = Json::parse(line);
      summarize({j});  // rejects records without the required fields
      records.push_back(std::move(j));
    } catch (const nlohmann::json::exception&) {
      ++stats.skipped_lines;
    } catch (const Error&) {
      ++stats.skipped_lines;
    }
  }
  stats.summary = summarize(records);
  const RunSummary& s = stats.summary;

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::kUnwritablePath, "cannot create " + out_dir.string() + ": " + ec.message());

  write_text(out_dir / "accuracy.csv",
             fmt::format("metric,value\nimages,{}\nclean_accuracy_pct,{}\nadversarial_accuracy_pct,{}\n"
                         "success_rate_pct,{}\nsuccesses,{}\nfailed,{}\nmean_queries,{:.1f}\nskipped_lines,{}\n",
                         s.images, pct(s.clean_accuracy), pct(s.adversarial_accuracy), pct(s.success_rate),
                         s.successes, s.failed, s.mean_queries, stats.skipped_lines));

  struct ClassRow {
    std::size_t images = 0;
    std::size_t clean_correct = 0;
    std::size_t misclassified = 0;
  };
  std::map<std::string, ClassRow> classes;
  std::vector<Series> curves;
  std::vector<std::tuple<std::string, double, bool>> scatter;
  for (const auto& r : records) {
    const std::size_t y = r["true_label"].get<std::size_t>();
    const std::string name = r.value("true_label_name", std::to_string(y));
    auto& row = classes[name];
    ++row.images;
    row.clean_correct += r["clean_prediction"].get<std::size_t>() == y;
    row.misclassified += r["success"].get<bool>();

    const std::string id = r.value("image_id", std::string());
    scatter.emplace_back(id, r["queries"].get<double>(), r["success"].get<bool>());
    Series curve{id, {}};
    const auto s2 = r.find("stage2");
    if (s2 != r.end() && s2->is_object() && s2->contains("history") && (*s2)["history"].is_array()) {
      for (const auto& g : (*s2)["history"]) {
        const double v = g.value("best_so_far", std::nan(""));
        if (std::isfinite(v)) curve.points.emplace_back(g.value("generation", 0.0), v);
      }
    }
    if (!curve.points.empty()) curves.push_back(std::move(curve));
  }
  std::string per_class = "class,images,clean_correct,misclassified\n";
  for (const auto& [name, row] : classes) {
    per_class += fmt::format("{},{},{},{}\n", name, row.images, row.clean_correct, row.misclassified);
  }
  write_text(out_dir / "per_class.csv", per_class);
  write_text(out_dir / "objective_curves.svg", objective_svg(curves));
  write_text(out_dir / "success_vs_queries.svg", scatter_svg(scatter));
  return stats;
}

int cmd_report(const fs::path& results, const fs::path& out_dir, std::ostream& out) {
  try {
    const ReportStats st = write_report(results, out_dir);
    out << fmt::format("{} records, {} skipped; success rate {}%\n", st.summary.images, st.skipped_lines,
                       pct(st.summary.success_rate));
    if (st.skipped_lines > 0) out << "warning: skipped " << st.skipped_lines << " malformed line(s)\n";
    return kExitOk;
  } catch (const Error& e) {
    out << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace stormforge::cli
