#include "stormforge/remote_scorer.hpp"

#include <httplib.h>

#include <json.hpp>
#include <thread>

#include "stormforge/error.hpp"
#include "stormforge/png_io.hpp"

namespace stormforge {
namespace {

using nlohmann::json;

json parse_reply(const std::string& text) {
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw Error(Errc::kProtocol, "reply is not a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(Errc::kProtocol, std::string("malformed reply: ") + e.what());
  }
}

std::vector<double> number_array(const json& j, const char* what) {
  if (!j.is_array()) throw Error(Errc::kProtocol, std::string(what) + " is not an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(Errc::kProtocol, std::string(what) + " holds a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::string png_base64(const Image& img) {
  const auto bytes = encode_png(img);
  return httplib::detail::base64_encode(std::string(bytes.begin(), bytes.end()));
}

ScorerConnection::ScorerConnection(RemoteOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) throw Error(Errc::kConfig, "remote scorer endpoint is empty");
  if (options_.retry.max_retries < 0) throw Error(Errc::kConfig, "retry.max_retries must be >= 0");
}

std::string ScorerConnection::post_once(const std::string& path, const std::string& body) const {
  httplib::Client client(options_.endpoint);
  const auto t = static_cast<time_t>(options_.timeout.count());
  client.set_connection_timeout(t, 0);
  client.set_read_timeout(t, 0);
  client.set_write_timeout(t, 0);
  const httplib::Headers headers{{"X-Stormforge-Protocol", std::to_string(kProtocolVersion)}};
  auto res = client.Post(path, headers, body, "application/json");
  if (!res) {
    throw Error(Errc::kTransport, options_.endpoint + path + ": " + httplib::to_string(res.error()));
  }
  if (res->status >= 500) {
    throw Error(Errc::kTransport, options_.endpoint + path + ": HTTP " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(Errc::kProtocol, options_.endpoint + path + ": HTTP " + std::to_string(res->status) + " " + res->body);
  }
  return res->body;
}

std::string ScorerConnection::post_json(const std::string& path, const std::string& body) const {
  auto delay = options_.retry.base_delay;
  for (int attempt = 0;; ++attempt) {
    try {
      return post_once(path, body);
    } catch (const Error& e) {
      if (!e.retryable() || attempt >= options_.retry.max_retries) throw;
    }
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

RemoteScorer::RemoteScorer(RemoteOptions options, LabelSet labels)
    : conn_(std::move(options)), labels_(std::move(labels)) {
  labels_.validate();
}

const std::string& RemoteScorer::connect() {
  std::lock_guard lock(session_mutex_);
  if (!session_.empty()) return session_;
  const json req = {{"labels", labels_.labels}, {"prompt_template", labels_.prompt_template}};
  const json reply = parse_reply(conn_.post_json("/session", req.dump()));
  if (reply.contains("protocol_version")) {
    const auto& v = reply["protocol_version"];
    if (!v.is_number_integer() || v.get<int>() != kProtocolVersion) {
      throw Error(Errc::kProtocolVersion, "sidecar speaks protocol " + v.dump() + ", client speaks " +
                                              std::to_string(kProtocolVersion));
    }
  }
  if (!reply.contains("session") || !(reply["session"].is_string() || reply["session"].is_number())) {
    throw Error(Errc::kProtocol, "session reply lacks a session id");
  }
  session_ = reply["session"].is_string() ? reply["session"].get<std::string>() : reply["session"].dump();
  return session_;
}

ScoreVector RemoteScorer::do_score(const Image& img) {
  const std::string session = connect();
  const json req = {{"session", session}, {"image_png_b64", png_base64(img)}};
  const json reply = parse_reply(conn_.post_json("/score", req.dump()));
  if (!reply.contains("scores")) throw Error(Errc::kProtocol, "score reply lacks 'scores'");
  ScoreVector s{number_array(reply["scores"], "scores")};
  s.validate(labels_.size());
  return s;
}

PerceptualFeatures RemoteFeatureExtractor::extract(const Image& img) const {
  const json req = {{"image_png_b64", png_base64(img)}};
  const json reply = parse_reply(conn_.post_json("/features", req.dump()));
  if (!reply.contains("levels") || !reply["levels"].is_array()) {
    throw Error(Errc::kProtocol, "features reply lacks 'levels'");
  }
  PerceptualFeatures out;
  std::size_t i = 0;
  for (const auto& level : reply["levels"]) {
    out.levels.push_back(number_array(level, "levels[]"));
    std::string name = "level_" + std::to_string(i);
    if (reply.contains("layers") && reply["layers"].is_array() && i < reply["layers"].size() &&
        reply["layers"][i].is_string()) {
      name = reply["layers"][i].get<std::string>();
    }
    out.level_names.push_back(std::move(name));
    ++i;
  }
  return out;
}

}  // namespace stormforge
