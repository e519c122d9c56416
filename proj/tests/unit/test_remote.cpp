#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "stormforge/error.hpp"
#include "stormforge/remote_scorer.hpp"
#include "temp_dir.hpp"

using namespace stormforge;
using nlohmann::json;

namespace {

// Scripted sidecar on an ephemeral local port.
class FakeSidecar {
 public:
  FakeSidecar() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeSidecar() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

RemoteOptions fast(const std::string& endpoint) {
  RemoteOptions o;
  o.endpoint = endpoint;
  o.timeout = std::chrono::seconds(5);
  o.retry.base_delay = std::chrono::milliseconds(1);
  return o;
}

LabelSet two() { return LabelSet::from_template({"cat", "dog"}, "a photo of a {}."); }

void session_ok(httplib::Server& s, int version = 1) {
  s.Post("/session", [version](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body);
    if (body["labels"].size() != 2 || req.get_header_value("X-Stormforge-Protocol") != "1") {
      res.status = 400;
      return;
    }
    res.set_content(json{{"session", "s-1"}, {"protocol_version", version}}.dump(), "application/json");
  });
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::kConfig;
}

// Required keys present, no keys outside "properties" when the schema closes the object.
bool conforms(const json& body, const json& def) {
  for (const auto& k : def["required"]) {
    if (!body.contains(k.get<std::string>())) return false;
  }
  if (def.value("additionalProperties", true) == false) {
    for (const auto& [k, v] : body.items()) {
      if (!def["properties"].contains(k)) return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("remote") {
  TEST_CASE("echo fixture loops back the vector exactly") {
    FakeSidecar side;
    session_ok(side.server());
    std::atomic<bool> saw_image{false};
    side.server().Post("/score", [&](const httplib::Request& req, httplib::Response& res) {
      const json body = json::parse(req.body);
      saw_image = body["session"] == "s-1" && !body["image_png_b64"].get<std::string>().empty();
      res.set_content(R"({"scores": [0.1, 0.2]})", "application/json");
    });
    RemoteScorer scorer(fast(side.endpoint()), two());
    const ScoreVector s = scorer.score(Image(16, 16, 0.5));
    CHECK(s.values == std::vector<double>{0.1, 0.2});
    CHECK(saw_image);
    CHECK(scorer.query_count() == 1);
  }

  TEST_CASE("malformed reply is a protocol error") {
    FakeSidecar side;
    session_ok(side.server());
    side.server().Post("/score", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("{not json", "application/json");
    });
    RemoteScorer scorer(fast(side.endpoint()), two());
    CHECK(code_of([&] { scorer.score(Image(8, 8)); }) == Errc::kProtocol);
    CHECK(scorer.query_count() == 1);
  }

  TEST_CASE("transient failures are retried") {
    FakeSidecar side;
    session_ok(side.server());
    std::atomic<int> calls{0};
    side.server().Post("/score", [&](const httplib::Request&, httplib::Response& res) {
      if (calls++ < 3) {
        res.status = 503;
        return;
      }
      res.set_content(R"({"scores": [0.4, 0.6]})", "application/json");
    });
    RemoteScorer scorer(fast(side.endpoint()), two());
    CHECK(scorer.score(Image(8, 8)).values == std::vector<double>{0.4, 0.6});
    CHECK(calls == 4);
    CHECK(scorer.query_count() == 1);
  }

  TEST_CASE("exhausted retries surface a retryable transport error") {
    FakeSidecar side;
    session_ok(side.server());
    std::atomic<int> calls{0};
    side.server().Post("/score", [&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      res.status = 502;
    });
    RemoteScorer scorer(fast(side.endpoint()), two());
    try {
      scorer.score(Image(8, 8));
      FAIL("expected kTransport");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kTransport);
      CHECK(e.retryable());
    }
    CHECK(calls == 4);
  }

  TEST_CASE("unreachable endpoint") {
    // Nothing listens on the discard port.
    RemoteScorer scorer(fast("http://127.0.0.1:9"), two());
    CHECK(code_of([&] { scorer.connect(); }) == Errc::kTransport);
  }

  TEST_CASE("protocol version and label-count mismatches") {
    FakeSidecar side;
    session_ok(side.server(), 2);
    RemoteScorer scorer(fast(side.endpoint()), two());
    try {
      scorer.connect();
      FAIL("expected kProtocolVersion");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kProtocolVersion);
      CHECK_FALSE(e.retryable());
    }

    FakeSidecar other;
    session_ok(other.server());
    other.server().Post("/score", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"scores": [0.1, 0.2, 0.3]})", "application/json");
    });
    RemoteScorer three(fast(other.endpoint()), two());
    CHECK(code_of([&] { three.score(Image(8, 8)); }) == Errc::kLabelSetMismatch);
  }

  TEST_CASE("client errors are not retried") {
    FakeSidecar side;
    std::atomic<int> calls{0};
    side.server().Post("/session", [&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      res.status = 404;
    });
    RemoteScorer scorer(fast(side.endpoint()), two());
    CHECK(code_of([&] { scorer.connect(); }) == Errc::kProtocol);
    CHECK(calls == 1);
  }

  TEST_CASE("remote features") {
    FakeSidecar side;
    side.server().Post("/features", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"levels": [[1, 2], [3], [4, 5, 6], [7]], "layers": ["relu1_2", "relu2_2", "relu3_3", "relu4_3"]})",
                      "application/json");
    });
    const RemoteFeatureExtractor ex(fast(side.endpoint()));
    const PerceptualFeatures f = ex.extract(Image(8, 8));
    CHECK(f.levels.size() == 4);
    CHECK(f.level_names[2] == "relu3_3");
    CHECK(f.levels[2] == std::vector<double>{4, 5, 6});
    CHECK(perceptual_distance(f, ex.extract(Image(8, 8))) == 0.0);
  }

  TEST_CASE("png payload decodes back") {
    const std::string b64 = png_base64(Image(2, 2, 1.0));
    CHECK(b64.rfind("iVBORw0KGgo", 0) == 0);
  }

  TEST_CASE("requests match the committed schema") {
    const json schema = json::parse(fixture::read_file(fixture::source_path("schema/scorer_protocol.schema.json")));
    const json& defs = schema["$defs"];
    FakeSidecar side;
    std::vector<json> sessions, scores, features;
    side.server().Post("/session", [&](const httplib::Request& req, httplib::Response& res) {
      sessions.push_back(json::parse(req.body));
      res.set_content(R"({"session": "s-9", "protocol_version": 1})", "application/json");
    });
    side.server().Post("/score", [&](const httplib::Request& req, httplib::Response& res) {
      scores.push_back(json::parse(req.body));
      res.set_content(R"({"scores": [0.5, 0.25]})", "application/json");
    });
    side.server().Post("/features", [&](const httplib::Request& req, httplib::Response& res) {
      features.push_back(json::parse(req.body));
      res.set_content(R"({"levels": [[1.0]]})", "application/json");
    });
    RemoteScorer scorer(fast(side.endpoint()), two());
    scorer.score(Image(8, 8, 0.2));
    RemoteFeatureExtractor(fast(side.endpoint())).extract(Image(8, 8));
    REQUIRE(sessions.size() == 1);
    REQUIRE(scores.size() == 1);
    REQUIRE(features.size() == 1);
    CHECK(conforms(sessions[0], defs["session_request"]));
    CHECK(conforms(scores[0], defs["score_request"]));
    CHECK(conforms(features[0], defs["features_request"]));
    CHECK(conforms(json::parse(R"({"session": "s-9", "protocol_version": 1})"), defs["session_response"]));
    CHECK_FALSE(conforms(json::parse(R"({"session": "s", "image_png_b64": "x", "extra": 1})"), defs["score_request"]));
  }
}
