#pragma once

#include <chrono>
#include <mutex>
#include <string>

#include "stormforge/perceptual.hpp"
#include "stormforge/scorer.hpp"

namespace stormforge {

inline constexpr int kProtocolVersion = 1;

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_delay{100};  // doubled after every failed attempt
};

struct RemoteOptions {
  std::string endpoint;  // e.g. "http://127.0.0.1:8000"
  std::chrono::seconds timeout{30};
  RetryPolicy retry;
};

// Thin JSON-over-HTTP transport shared by the scorer and the feature client.
// Transport failures and 5xx replies are retried per the policy; everything
// else is a protocol error.
class ScorerConnection {
 public:
  explicit ScorerConnection(RemoteOptions options);

  // POSTs `body` to `path`, returning the parsed JSON text of a 2xx reply.
  std::string post_json(const std::string& path, const std::string& body) const;
  const RemoteOptions& options() const noexcept { return options_; }

 private:
  std::string post_once(const std::string& path, const std::string& body) const;
  RemoteOptions options_;
};

// Scorer backed by the sidecar wire protocol:
//   POST /session {"labels": [...], "prompt_template": s} -> {"session": id}
//   POST /score   {"session": id, "image_png_b64": s}     -> {"scores": [...]}
// A "protocol_version" field in the session reply, when present, must equal 1.
class RemoteScorer final : public Scorer {
 public:
  RemoteScorer(RemoteOptions options, LabelSet labels);

  // Opens the session if needed and returns its id.
  const std::string& connect();
  std::size_t label_count() const override { return labels_.size(); }
  std::string describe() const override { return "remote(" + conn_.options().endpoint + ")"; }

 protected:
  ScoreVector do_score(const Image& img) override;

 private:
  ScorerConnection conn_;
  LabelSet labels_;
  std::mutex session_mutex_;
  std::string session_;
};

// POST /features {"image_png_b64": s} -> {"levels": [[...], ...], "layers": [...]}.
class RemoteFeatureExtractor final : public FeatureExtractor {
 public:
  explicit RemoteFeatureExtractor(RemoteOptions options) : conn_(std::move(options)) {}
  PerceptualFeatures extract(const Image& img) const override;
  std::string name() const override { return "remote(" + conn_.options().endpoint + ")"; }

 private:
  ScorerConnection conn_;
};

std::string png_base64(const Image& img);

}  // namespace stormforge
