#pragma once

#include "malscan/category.hpp"
#include "malscan/common.hpp"
#include "malscan/cvss.hpp"
#include "malscan/language.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <memory>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace malscan {

class RuleLoadError : public Error {
public:
  RuleLoadError(std::size_t line, const std::string &reason)
      : Error("rule file line " + std::to_string(line) + ": " + reason),
        line_(line) {}
  /// 1-based line of the offending entry.
  [[nodiscard]] std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// A compiled text pattern. A leading "(?i)" makes it case-insensitive.
class Pattern {
public:
  Pattern() = default;
  explicit Pattern(std::string source) : source_(std::move(source)) {
    std::string body = source_;
    auto flags = std::regex::ECMAScript;
    if (body.rfind("(?i)", 0) == 0) {
      body.erase(0, 4);
      flags |= std::regex::icase;
    }
    if (body.empty())
      throw std::regex_error(std::regex_constants::error_collate);
    regex_ = std::make_shared<const std::regex>(body, flags);
  }

  [[nodiscard]] const std::string &source() const { return source_; }
  [[nodiscard]] bool empty() const { return !regex_; }
  [[nodiscard]] const std::regex &regex() const { return *regex_; }

private:
  std::string source_;
  std::shared_ptr<const std::regex> regex_;
};

struct IndicatorRule {
  std::string rule_id;
  VulnCategory category = VulnCategory::sql_injection;
  std::vector<LanguageId> languages; ///< empty = all languages
  Pattern pattern;
  Pattern context_pattern; ///< optional
  cvss::Vector vector;
  std::string description;
  std::size_t line = 0;

  [[nodiscard]] bool applies_to(LanguageId lang) const {
    return languages.empty() ||
           std::find(languages.begin(), languages.end(), lang) != languages.end();
  }
};

struct RuleSet {
  std::vector<IndicatorRule> rules;
  std::string digest; ///< digest of the rule file text
};

namespace detail {

inline std::size_t line_of(const YAML::Node &node) {
  return static_cast<std::size_t>(node.Mark().line) + 1;
}

inline std::string required_scalar(const YAML::Node &entry, const char *key) {
  auto node = entry[key];
  if (!node)
    throw RuleLoadError(line_of(entry), std::string("missing field '") + key + "'");
  if (!node.IsScalar())
    throw RuleLoadError(line_of(node), std::string("field '") + key + "' must be a string");
  return node.as<std::string>();
}

} // namespace detail

/// Parses a rule file. The document is a mapping with a `rules` sequence;
/// an empty document is an empty rule set. Fails atomically.
inline RuleSet load_rules(std::string_view source) {
  static const std::set<std::string> kFields = {
      "rule_id", "category", "languages", "pattern",
      "context_pattern", "vector", "description"};
  RuleSet set;
  set.digest = digest_of(source);
  YAML::Node doc;
  try {
    doc = YAML::Load(std::string(source));
  } catch (const YAML::Exception &e) {
    throw RuleLoadError(static_cast<std::size_t>(e.mark.line) + 1, e.msg);
  }
  if (!doc || doc.IsNull())
    return set;
  if (!doc.IsMap())
    throw RuleLoadError(detail::line_of(doc), "rule file must be a mapping with a 'rules' list");
  for (auto kv : doc)
    if (kv.first.as<std::string>() != "rules")
      throw RuleLoadError(detail::line_of(kv.first),
                          "unknown top-level key '" + kv.first.as<std::string>() + "'");
  auto rules = doc["rules"];
  if (!rules || rules.IsNull())
    return set;
  if (!rules.IsSequence())
    throw RuleLoadError(detail::line_of(rules), "'rules' must be a list");

  std::set<std::string> ids;
  for (const auto &entry : rules) {
    const auto line = detail::line_of(entry);
    if (!entry.IsMap())
      throw RuleLoadError(line, "rule entry must be a mapping");
    for (auto kv : entry) {
      auto key = kv.first.as<std::string>();
      if (!kFields.count(key))
        throw RuleLoadError(detail::line_of(kv.first), "unknown field '" + key + "'");
    }
    IndicatorRule rule;
    rule.line = line;
    rule.rule_id = detail::required_scalar(entry, "rule_id");
    if (trim(rule.rule_id).empty())
      throw RuleLoadError(line, "empty rule_id");
    if (!ids.insert(rule.rule_id).second)
      throw RuleLoadError(line, "duplicate rule_id '" + rule.rule_id + "'");

    auto category = detail::required_scalar(entry, "category");
    auto parsed = parse_category(category);
    if (!parsed)
      throw RuleLoadError(line, "unknown category '" + category + "'");
    rule.category = *parsed;

    if (auto langs = entry["languages"]; langs && !langs.IsNull()) {
      if (!langs.IsSequence())
        throw RuleLoadError(detail::line_of(langs), "'languages' must be a list");
      for (const auto &l : langs) {
        auto name = l.as<std::string>();
        auto id = parse_language(name);
        if (!id)
          throw RuleLoadError(detail::line_of(l), "unknown language '" + name + "'");
        rule.languages.push_back(*id);
      }
    }

    auto pattern = detail::required_scalar(entry, "pattern");
    if (pattern.empty())
      throw RuleLoadError(line, "empty pattern in rule '" + rule.rule_id + "'");
    try {
      rule.pattern = Pattern(pattern);
    } catch (const std::regex_error &e) {
      throw RuleLoadError(line, "pattern of rule '" + rule.rule_id +
                                    "' does not compile: " + e.what());
    }
    if (auto ctx = entry["context_pattern"]; ctx && !ctx.IsNull()) {
      auto text = ctx.as<std::string>();
      if (!text.empty()) {
        try {
          rule.context_pattern = Pattern(text);
        } catch (const std::regex_error &e) {
          throw RuleLoadError(line, "context_pattern of rule '" + rule.rule_id +
                                        "' does not compile: " + e.what());
        }
      }
    }

    auto vector = detail::required_scalar(entry, "vector");
    try {
      rule.vector = cvss::parse_vector(vector);
    } catch (const cvss::MalformedVector &e) {
      throw RuleLoadError(line, e.what());
    }
    rule.description = detail::required_scalar(entry, "description");
    set.rules.push_back(std::move(rule));
  }
  return set;
}

} // namespace malscan
