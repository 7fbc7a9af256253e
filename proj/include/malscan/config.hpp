#pragma once

#include "malscan/model_backend.hpp"
#include "malscan/orchestrator.hpp"

#include <yaml-cpp/yaml.h>

#include <set>
#include <string>

namespace malscan {

struct AppConfig {
  ScanConfig scan;
  ModelConfig model;
};

namespace detail {

template <typename T>
T config_value(const YAML::Node &node, const std::string &key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception &) {
    throw ConfigError("config line " + std::to_string(node.Mark().line + 1) + ": '" + key +
                      "' has the wrong type");
  }
}

inline void reject_unknown(const YAML::Node &map, const std::set<std::string> &known,
                           const std::string &where) {
  for (const auto &kv : map) {
    auto key = kv.first.as<std::string>();
    if (!known.count(key))
      throw ConfigError("config line " + std::to_string(kv.first.Mark().line + 1) +
                        ": unknown key '" + where + key + "'");
  }
}

} // namespace detail

/// Reads a YAML config document. Unknown keys are errors. Keys mirror the
/// long CLI flags; model settings sit under `model:`.
inline AppConfig parse_config(std::string_view text, AppConfig base = {}) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception &e) {
    throw ConfigError("config is not valid YAML: " + std::string(e.what()));
  }
  if (!root || root.IsNull())
    return base;
  if (!root.IsMap())
    throw ConfigError("config must be a mapping");
  detail::reject_unknown(root,
                         {"flag_threshold", "fail_threshold", "token_budget", "max_parallel",
                          "backend", "force_analyze_all", "full_report", "rules", "include",
                          "exclude", "fragment_bytes", "cache_dir", "model"},
                         "");
  auto &s = base.scan;
  using detail::config_value;
  if (auto n = root["flag_threshold"]) s.flag_threshold = config_value<double>(n, "flag_threshold");
  if (auto n = root["fail_threshold"]) s.fail_threshold = config_value<double>(n, "fail_threshold");
  if (auto n = root["token_budget"]) s.token_budget = config_value<std::size_t>(n, "token_budget");
  if (auto n = root["max_parallel"]) s.max_parallel = config_value<std::size_t>(n, "max_parallel");
  if (auto n = root["backend"]) s.backend_id = config_value<std::string>(n, "backend");
  if (auto n = root["force_analyze_all"]) s.force_analyze_all = config_value<bool>(n, "force_analyze_all");
  if (auto n = root["full_report"]) s.full_report = config_value<bool>(n, "full_report");
  if (auto n = root["rules"]) s.rule_set_path = config_value<std::string>(n, "rules");
  if (auto n = root["include"]) s.include = config_value<std::vector<std::string>>(n, "include");
  if (auto n = root["exclude"]) s.exclude = config_value<std::vector<std::string>>(n, "exclude");
  if (auto n = root["fragment_bytes"]) s.fragment_bytes = config_value<std::size_t>(n, "fragment_bytes");
  if (auto n = root["cache_dir"]) s.cache_dir = config_value<std::string>(n, "cache_dir");
  if (auto m = root["model"]) {
    if (!m.IsMap())
      throw ConfigError("config: 'model' must be a mapping");
    detail::reject_unknown(m, {"endpoint", "name", "api_key_env", "timeout_seconds", "max_concurrent"},
                           "model.");
    auto &mc = base.model;
    if (auto n = m["endpoint"]) mc.endpoint = config_value<std::string>(n, "model.endpoint");
    if (auto n = m["name"]) mc.model = config_value<std::string>(n, "model.name");
    if (auto n = m["api_key_env"]) mc.api_key_env = config_value<std::string>(n, "model.api_key_env");
    if (auto n = m["timeout_seconds"]) mc.timeout_seconds = config_value<double>(n, "model.timeout_seconds");
    if (auto n = m["max_concurrent"]) mc.max_concurrent = config_value<std::size_t>(n, "model.max_concurrent");
  }
  return base;
}

} // namespace malscan
