#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>

namespace malscan {

enum class LanguageId {
  python,
  java,
  c,
  cpp,
  rust,
  go,
  scala,
  javascript,
  typescript,
  php,
  ruby,
  csharp,
  kotlin,
  swift,
  unknown,
};

inline constexpr std::array<LanguageId, 14> kRegisteredLanguages = {
    LanguageId::python,     LanguageId::java,       LanguageId::c,
    LanguageId::cpp,        LanguageId::rust,       LanguageId::go,
    LanguageId::scala,      LanguageId::javascript, LanguageId::typescript,
    LanguageId::php,        LanguageId::ruby,       LanguageId::csharp,
    LanguageId::kotlin,     LanguageId::swift,
};

/// Stable serialized name, used in reports, rule files and manifests.
inline std::string_view to_string(LanguageId id) {
  switch (id) {
  case LanguageId::python: return "python";
  case LanguageId::java: return "java";
  case LanguageId::c: return "c";
  case LanguageId::cpp: return "cpp";
  case LanguageId::rust: return "rust";
  case LanguageId::go: return "go";
  case LanguageId::scala: return "scala";
  case LanguageId::javascript: return "javascript";
  case LanguageId::typescript: return "typescript";
  case LanguageId::php: return "php";
  case LanguageId::ruby: return "ruby";
  case LanguageId::csharp: return "csharp";
  case LanguageId::kotlin: return "kotlin";
  case LanguageId::swift: return "swift";
  case LanguageId::unknown: return "unknown";
  }
  return "unknown";
}

/// Human display name for reports.
inline std::string_view display_name(LanguageId id) {
  switch (id) {
  case LanguageId::python: return "Python";
  case LanguageId::java: return "Java";
  case LanguageId::c: return "C";
  case LanguageId::cpp: return "C++";
  case LanguageId::rust: return "Rust";
  case LanguageId::go: return "Go";
  case LanguageId::scala: return "Scala";
  case LanguageId::javascript: return "JavaScript";
  case LanguageId::typescript: return "TypeScript";
  case LanguageId::php: return "PHP";
  case LanguageId::ruby: return "Ruby";
  case LanguageId::csharp: return "C#";
  case LanguageId::kotlin: return "Kotlin";
  case LanguageId::swift: return "Swift";
  case LanguageId::unknown: return "unknown";
  }
  return "unknown";
}

inline std::optional<LanguageId> parse_language(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (LanguageId id : kRegisteredLanguages)
    if (to_string(id) == lower)
      return id;
  if (lower == "unknown")
    return LanguageId::unknown;
  // Common aliases.
  if (lower == "c++" || lower == "cxx")
    return LanguageId::cpp;
  if (lower == "c#" || lower == "cs")
    return LanguageId::csharp;
  if (lower == "js")
    return LanguageId::javascript;
  if (lower == "ts")
    return LanguageId::typescript;
  if (lower == "py")
    return LanguageId::python;
  return std::nullopt;
}

struct ExtensionEntry {
  std::string_view extension;
  LanguageId language;
};

inline constexpr std::array<ExtensionEntry, 33> kExtensionTable = {{
    {".py", LanguageId::python},      {".pyw", LanguageId::python},
    {".java", LanguageId::java},      {".c", LanguageId::c},
    {".h", LanguageId::c},            {".cc", LanguageId::cpp},
    {".cpp", LanguageId::cpp},        {".cxx", LanguageId::cpp},
    {".hpp", LanguageId::cpp},        {".hh", LanguageId::cpp},
    {".hxx", LanguageId::cpp},        {".rs", LanguageId::rust},
    {".go", LanguageId::go},          {".scala", LanguageId::scala},
    {".sc", LanguageId::scala},       {".js", LanguageId::javascript},
    {".mjs", LanguageId::javascript}, {".cjs", LanguageId::javascript},
    {".jsx", LanguageId::javascript}, {".ts", LanguageId::typescript},
    {".tsx", LanguageId::typescript}, {".mts", LanguageId::typescript},
    {".php", LanguageId::php},        {".phtml", LanguageId::php},
    {".rb", LanguageId::ruby},        {".rake", LanguageId::ruby},
    {".cs", LanguageId::csharp},      {".kt", LanguageId::kotlin},
    {".kts", LanguageId::kotlin},     {".swift", LanguageId::swift},
    {".cppm", LanguageId::cpp},       {".ipp", LanguageId::cpp},
    {".gemspec", LanguageId::ruby},
}};

inline std::optional<LanguageId> language_for_extension(std::string_view ext) {
  std::string lower(ext);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (const auto &entry : kExtensionTable)
    if (entry.extension == lower)
      return entry.language;
  return std::nullopt;
}

/// Override wins, then the extension table, then `unknown`.
inline LanguageId detect_language(std::string_view path,
                                  std::optional<LanguageId> override = {}) {
  if (override)
    return *override;
  auto slash = path.find_last_of("/\\");
  std::string_view base =
      slash == std::string_view::npos ? path : path.substr(slash + 1);
  auto dot = base.find_last_of('.');
  if (dot == std::string_view::npos || dot == 0)
    return LanguageId::unknown;
  return language_for_extension(base.substr(dot)).value_or(LanguageId::unknown);
}

} // namespace malscan
