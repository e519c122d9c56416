#include <ostream>
#include <random>

#include <fmt/core.h>

#include "stormforge/cli.hpp"
#include "stormforge/error.hpp"

namespace stormforge::cli {

int cmd_scorer_check(const RemoteOptions& options, const LabelSet& labels, bool check_features, std::ostream& out) {
  try {
    RemoteScorer scorer(options, labels);
    out << "session " << scorer.connect() << '\n';

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> noise(64 * 64 * 3);
    for (double& v : noise) v = unit(rng);
    const Image images[] = {Image(64, 64, 0.5), Image(64, 64, std::move(noise))};
    for (const Image& img : images) {
      const ScoreVector s = scorer.score(img);
      out << fmt::format("score ok: {} values, argmax {}\n", s.size(), labels.labels[predict(s)]);
    }

    if (check_features) {
      const RemoteFeatureExtractor extractor(options);
      const PerceptualFeatures f = extractor.extract(images[0]);
      if (f.levels.empty()) throw Error(Errc::kProtocol, "features reply has no levels");
      out << fmt::format("features ok: {} levels\n", f.levels.size());
    }
    out << "protocol ok\n";
    return kExitOk;
  } catch (const Error& e) {
    out << "scorer check failed: " << e.what() << '\n';
    if (e.code() == Errc::kTransport) return kExitUnreachable;
    if (e.code() == Errc::kConfig) return kExitConfig;
    return kExitFailure;
  }
}

}  // namespace stormforge::cli
