#include "stormforge/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "stormforge/error.hpp"

namespace stormforge {

LabelSet LabelSet::from_template(std::vector<std::string> labels, std::string prompt_template) {
  LabelSet set;
  set.labels = std::move(labels);
  set.prompt_template = std::move(prompt_template);
  for (const auto& label : set.labels) {
    std::string prompt = set.prompt_template;
    for (auto pos = prompt.find("{}"); pos != std::string::npos; pos = prompt.find("{}", pos + label.size())) {
      prompt.replace(pos, 2, label);
    }
    set.prompts.push_back(std::move(prompt));
  }
  set.validate();
  return set;
}

std::size_t LabelSet::index_of(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw Error(Errc::kInvalidArgument, "unknown label '" + label + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

void LabelSet::validate() const {
  if (labels.empty()) throw Error(Errc::kInvalidArgument, "label set is empty");
  if (prompts.size() != labels.size()) throw Error(Errc::kInvalidArgument, "one prompt per label required");
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l).second) throw Error(Errc::kInvalidArgument, "duplicate label '" + l + "'");
  }
}

void ScoreVector::validate(std::size_t label_count) const {
  if (values.size() != label_count) {
    throw Error(Errc::kLabelSetMismatch, "got " + std::to_string(values.size()) + " scores for " +
                                             std::to_string(label_count) + " labels");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(Errc::kProtocol, "non-finite score");
  }
}

std::size_t predict(std::span<const double> scores) {
  if (scores.empty()) throw Error(Errc::kInvalidArgument, "predict on an empty score vector");
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return best;
}

ScoreVector Scorer::score(const Image& img) {
  queries_.fetch_add(1, std::memory_order_relaxed);
  ScoreVector s = do_score(img);
  s.validate(label_count());
  return s;
}

}  // namespace stormforge
