#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace malscan {

enum class VulnCategory {
  sql_injection,
  cross_site_scripting,
  remote_code_execution,
  command_injection,
  path_traversal,
  insecure_deserialization,
  hardcoded_credentials,
  backdoor,
  logic_bomb,
  privilege_escalation,
};

inline constexpr std::array<VulnCategory, 10> kAllCategories = {
    VulnCategory::sql_injection,         VulnCategory::cross_site_scripting,
    VulnCategory::remote_code_execution, VulnCategory::command_injection,
    VulnCategory::path_traversal,        VulnCategory::insecure_deserialization,
    VulnCategory::hardcoded_credentials, VulnCategory::backdoor,
    VulnCategory::logic_bomb,            VulnCategory::privilege_escalation,
};

inline std::string_view to_string(VulnCategory c) {
  switch (c) {
  case VulnCategory::sql_injection: return "sql_injection";
  case VulnCategory::cross_site_scripting: return "cross_site_scripting";
  case VulnCategory::remote_code_execution: return "remote_code_execution";
  case VulnCategory::command_injection: return "command_injection";
  case VulnCategory::path_traversal: return "path_traversal";
  case VulnCategory::insecure_deserialization: return "insecure_deserialization";
  case VulnCategory::hardcoded_credentials: return "hardcoded_credentials";
  case VulnCategory::backdoor: return "backdoor";
  case VulnCategory::logic_bomb: return "logic_bomb";
  case VulnCategory::privilege_escalation: return "privilege_escalation";
  }
  return "sql_injection";
}

inline std::string_view display_name(VulnCategory c) {
  switch (c) {
  case VulnCategory::sql_injection: return "SQL Injection";
  case VulnCategory::cross_site_scripting: return "Cross-Site Scripting";
  case VulnCategory::remote_code_execution: return "Remote Code Execution";
  case VulnCategory::command_injection: return "Command Injection";
  case VulnCategory::path_traversal: return "Path Traversal";
  case VulnCategory::insecure_deserialization: return "Insecure Deserialization";
  case VulnCategory::hardcoded_credentials: return "Hardcoded Credentials";
  case VulnCategory::backdoor: return "Backdoor";
  case VulnCategory::logic_bomb: return "Logic Bomb";
  case VulnCategory::privilege_escalation: return "Privilege Escalation";
  }
  return "";
}

inline std::optional<VulnCategory> parse_category(std::string_view s) {
  for (auto c : kAllCategories)
    if (to_string(c) == s)
      return c;
  return std::nullopt;
}

} // namespace malscan
