#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stormforge/image.hpp"

namespace stormforge {

// Ordered label names with one text prompt per label.
struct LabelSet {
  std::vector<std::string> labels;
  std::vector<std::string> prompts;
  std::string prompt_template = "{}";

  // Every "{}" in the template is replaced by the label.
  static LabelSet from_template(std::vector<std::string> labels, std::string prompt_template);

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t index_of(const std::string& label) const;  // throws kInvalidArgument
  void validate() const;
};

// One similarity per label, in LabelSet order.
struct ScoreVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  std::span<const double> span() const noexcept { return values; }
  void validate(std::size_t label_count) const;  // kLabelSetMismatch / kProtocol
};

// Argmax; ties go to the lowest index.
std::size_t predict(std::span<const double> scores);
inline std::size_t predict(const ScoreVector& s) { return predict(s.span()); }

// Black-box victim. score() is the only entry point and bumps the query
// counter exactly once per call, whether or not the call succeeds.
class Scorer {
 public:
  virtual ~Scorer() = default;
  Scorer() = default;
  Scorer(const Scorer&) = delete;
  Scorer& operator=(const Scorer&) = delete;

  ScoreVector score(const Image& img);
  std::uint64_t query_count() const noexcept { return queries_.load(std::memory_order_relaxed); }
  virtual std::size_t label_count() const = 0;
  virtual std::string describe() const = 0;

 protected:
  virtual ScoreVector do_score(const Image& img) = 0;

 private:
  std::atomic<std::uint64_t> queries_{0};
};

// Forwards to a shared scorer while keeping a private count, so concurrent
// jobs can each account for their own queries.
class CountingScorer final : public Scorer {
 public:
  explicit CountingScorer(Scorer& inner) : inner_(inner) {}
  std::size_t label_count() const override { return inner_.label_count(); }
  std::string describe() const override { return inner_.describe(); }

 protected:
  ScoreVector do_score(const Image& img) override { return inner_.score(img); }

 private:
  Scorer& inner_;
};

}  // namespace stormforge
