#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "metaparse/conllu.hpp"
#include "metaparse/model.hpp"

namespace metaparse {

inline constexpr const char* kCheckpointFormat = "metaparse-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// JSON container: the full ParserConfig, its hash, and every parameter with
/// name, group, shape and values (shortest round-trip decimal form).
inline nlohmann::json checkpoint_json(const ParserParams& model, const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : model.params()) {
    params.push_back({{"name", p.name}, {"group", to_string(p.group)}, {"shape", p.value.shape()}, {"data", p.value.values()}});
  }
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"config", model.config().to_json()},
          {"config_hash", hash_hex(model.config().hash())},
          {"meta", extra},
          {"params", params}};
}

/// Rebuilds a model. With `expected`, the stored configuration must hash to
/// the same value; the error names both hashes.
inline ParserParams checkpoint_from_json(const nlohmann::json& j, const std::optional<ParserConfig>& expected = std::nullopt) {
  try {
    if (j.value("format", std::string()) != kCheckpointFormat) throw ConfigError("not a checkpoint file");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw ConfigError("unsupported checkpoint version " + j.at("version").dump());
    ParserConfig config = ParserConfig::from_json(j.at("config"));
    const std::string stored = j.at("config_hash").get<std::string>();
    if (stored != hash_hex(config.hash())) {
      throw ConfigError("checkpoint is corrupt: stored config hash " + stored + " but its config hashes to " +
                        hash_hex(config.hash()));
    }
    if (expected && expected->hash() != config.hash()) {
      throw ConfigError("config hash mismatch: checkpoint has " + stored + ", current configuration is " +
                        hash_hex(expected->hash()));
    }
    ParamSet params;
    for (const auto& p : j.at("params")) {
      const std::string group = p.at("group").get<std::string>();
      if (group != "encoder" && group != "decoder") throw ConfigError("unknown parameter group '" + group + "'");
      auto data = p.at("data").get<std::vector<double>>();
      std::vector<real> values(data.begin(), data.end());
      params.add(p.at("name").get<std::string>(), group == "encoder" ? ParamGroup::encoder : ParamGroup::decoder,
                 Tensor(p.at("shape").get<std::vector<std::size_t>>(), std::move(values)));
    }
    return ParserParams::from_parts(std::move(config), std::move(params));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const std::string& path, const ParserParams& model,
                            const nlohmann::json& extra = nlohmann::json::object()) {
  write_file(path, checkpoint_json(model, extra).dump() + "\n");
}

inline ParserParams load_checkpoint(const std::string& path, const std::optional<ParserConfig>& expected = std::nullopt) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("checkpoint " + path + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j, expected);
}

}  // namespace metaparse
