#pragma once

#include <set>
#include <string>

#include <json.hpp>

#include "stormforge/attack.hpp"

namespace stormforge {

using Json = nlohmann::ordered_json;

// Reads optional fields of one JSON object, reporting type errors and unknown
// keys as kConfig with the dotted field path.
class FieldReader {
 public:
  FieldReader(const Json& object, std::string path);

  template <typename T>
  bool read(const char* key, T& out) {
    const auto it = object_.find(key);
    seen_.insert(key);
    if (it == object_.end()) return false;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(key, "has the wrong type");
    }
    return true;
  }

  const Json* child(const char* key);
  std::string path(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;
  // Throws on any key that was never asked for.
  void finish() const;

 private:
  const Json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

Json to_json(const RainParams& p);
RainParams rain_from_json(const Json& j, const std::string& path, RainParams base = {});

Json to_json(const IlluminationParams& p);
IlluminationParams illumination_from_json(const Json& j, const std::string& path,
                                          IlluminationParams base = default_illumination());

Json to_json(const SsimConstants& c);

Json to_json(const attack::Stage1Config& c);
attack::Stage1Config stage1_from_json(const Json& j, const std::string& path, attack::Stage1Config base = {});

Json to_json(const attack::Stage2Config& c);
attack::Stage2Config stage2_from_json(const Json& j, const std::string& path, attack::Stage2Config base = {});

// One JSONL record. Label names are resolved through `labels` when given.
Json to_json(const attack::AttackResult& r, const LabelSet* labels = nullptr);

}  // namespace stormforge
