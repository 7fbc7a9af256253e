#pragma once

#include "malscan/backend.hpp"
#include "malscan/common.hpp"
#include "malscan/embedded_file.hpp"
#include "malscan/generated/assets_data.hpp"

#include <string>
#include <string_view>

namespace malscan::assets {

/// Contents of a bundled asset, e.g. "rules/default.yaml".
inline std::string_view get(std::string_view path) {
  for (const auto &f : assets_data::kFiles)
    if (f.path == path)
      return f.data;
  throw Error("no bundled asset named " + std::string(path));
}

inline std::string_view default_rules() { return get("rules/default.yaml"); }
inline std::string_view report_schema() { return get("schema/scan-report.schema.json"); }
inline std::string_view response_schema() {
  return get("schema/analysis-response.schema.json");
}

inline PromptTemplates prompt_templates() {
  PromptTemplates t;
  t.system = std::string(get("prompts/system.txt"));
  t.summarize = std::string(get("prompts/summarize.txt"));
  t.analyze = std::string(get("prompts/analyze.txt"));
  t.repair = std::string(get("prompts/repair.txt"));
  t.response_schema = std::string(response_schema());
  return t;
}

} // namespace malscan::assets
