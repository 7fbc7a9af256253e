#pragma once

#include "malscan/category.hpp"
#include "malscan/common.hpp"
#include "malscan/componentizer.hpp"
#include "malscan/cvss.hpp"
#include "malscan/prescore.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace malscan {

using json = nlohmann::json;

inline constexpr std::size_t kDefaultTokenBudget = 3072;

/// Conservative token count: one token per three bytes, rounded up.
inline std::size_t estimate_tokens(std::string_view text) {
  return (text.size() + 2) / 3;
}

enum class Task { summarize, analyze };

enum class Confidence { low, medium, high };

inline std::string_view to_string(Confidence c) {
  switch (c) {
  case Confidence::low: return "low";
  case Confidence::medium: return "medium";
  case Confidence::high: return "high";
  }
  return "low";
}

inline std::optional<Confidence> parse_confidence(std::string_view s) {
  if (s == "low") return Confidence::low;
  if (s == "medium") return Confidence::medium;
  if (s == "high") return Confidence::high;
  return std::nullopt;
}

struct ExploitTrace {
  std::string entry_point;
  std::vector<std::string> steps;
  std::string impact;
  friend bool operator==(const ExploitTrace &, const ExploitTrace &) = default;
};

struct Remediation {
  std::string recommendation;
  std::optional<std::string> patched_snippet;
  std::string preserves_functionality_note;
  friend bool operator==(const Remediation &, const Remediation &) = default;
};

struct Finding {
  VulnCategory category = VulnCategory::sql_injection;
  std::string title;
  std::string explanation;
  cvss::Vector severity_vector;
  cvss::Score score;
  ExploitTrace exploit_trace;
  Remediation remediation;
  Confidence confidence = Confidence::medium;
  friend bool operator==(const Finding &, const Finding &) = default;
};

struct DetectionReport {
  std::string component_id;
  std::vector<Finding> findings;
  std::string summary;
  std::string backend_id;
  std::string raw_response_digest;
  friend bool operator==(const DetectionReport &, const DetectionReport &) = default;
};

/// Score descending, ties by category name.
inline void sort_findings(std::vector<Finding> &findings) {
  std::stable_sort(findings.begin(), findings.end(),
                   [](const Finding &a, const Finding &b) {
                     if (a.score != b.score)
                       return a.score > b.score;
                     return to_string(a.category) < to_string(b.category);
                   });
}

struct BackendRequest {
  Task task = Task::analyze;
  CodeComponent component;
  std::vector<Indicator> indicators;
  LanguageId language = LanguageId::unknown;
  std::size_t token_budget = kDefaultTokenBudget;
  std::optional<std::string> summary; ///< Phase-1 context for analyze
};

class BackendError : public Error {
public:
  using Error::Error;
};

class BackendUnavailable : public BackendError {
public:
  explicit BackendUnavailable(const std::string &why)
      : BackendError("backend unavailable: " + why) {}
};

class MalformedResponse : public BackendError {
public:
  explicit MalformedResponse(const std::string &why)
      : BackendError("malformed backend response: " + why) {}
};

class BudgetExceeded : public BackendError {
public:
  BudgetExceeded(std::size_t estimated, std::size_t budget)
      : BackendError("request needs ~" + std::to_string(estimated) +
                     " tokens, budget is " + std::to_string(budget)),
        estimated_(estimated), budget_(budget) {}
  [[nodiscard]] std::size_t estimated() const { return estimated_; }
  [[nodiscard]] std::size_t budget() const { return budget_; }

private:
  std::size_t estimated_;
  std::size_t budget_;
};

// ---------------------------------------------------------------------------
// JSON mapping

inline json to_json(const ExploitTrace &t) {
  return {{"entry_point", t.entry_point}, {"steps", t.steps}, {"impact", t.impact}};
}

inline json to_json(const Remediation &r) {
  json j = {{"recommendation", r.recommendation},
            {"preserves_functionality_note", r.preserves_functionality_note}};
  if (r.patched_snippet)
    j["patched_snippet"] = *r.patched_snippet;
  return j;
}

inline json to_json(const Finding &f) {
  return {{"category", to_string(f.category)},
          {"title", f.title},
          {"explanation", f.explanation},
          {"cvss_vector", cvss::render(f.severity_vector)},
          {"score", f.score.value()},
          {"severity", to_string(f.score.severity())},
          {"confidence", to_string(f.confidence)},
          {"exploit_trace", to_json(f.exploit_trace)},
          {"remediation", to_json(f.remediation)}};
}

inline json to_json(const DetectionReport &d) {
  json findings = json::array();
  for (const auto &f : d.findings)
    findings.push_back(to_json(f));
  return {{"component_id", d.component_id},
          {"findings", std::move(findings)},
          {"summary", d.summary},
          {"backend_id", d.backend_id},
          {"raw_response_digest", d.raw_response_digest}};
}

namespace detail {

inline const json &field(const json &j, const char *key) {
  if (!j.is_object() || !j.contains(key))
    throw Error(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline std::string text_field(const json &j, const char *key) {
  const auto &v = field(j, key);
  if (!v.is_string())
    throw Error(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

} // namespace detail

/// Reads a finding; the stored score must equal base_score(cvss_vector).
inline Finding finding_from_json(const json &j) {
  Finding f;
  auto cat = detail::text_field(j, "category");
  auto parsed = parse_category(cat);
  if (!parsed)
    throw Error("unknown category '" + cat + "'");
  f.category = *parsed;
  f.title = detail::text_field(j, "title");
  f.explanation = detail::text_field(j, "explanation");
  f.severity_vector = cvss::parse_vector(detail::text_field(j, "cvss_vector"));
  f.score = cvss::base_score(f.severity_vector);
  if (j.contains("score")) {
    const auto &s = j.at("score");
    if (!s.is_number() || cvss::Score::from_decimal(s.get<double>()) != f.score)
      throw Error("score does not match cvss_vector");
  }
  auto conf = parse_confidence(detail::text_field(j, "confidence"));
  if (!conf)
    throw Error("unknown confidence level");
  f.confidence = *conf;
  const auto &t = detail::field(j, "exploit_trace");
  f.exploit_trace.entry_point = detail::text_field(t, "entry_point");
  f.exploit_trace.impact = detail::text_field(t, "impact");
  const auto &steps = detail::field(t, "steps");
  if (!steps.is_array())
    throw Error("exploit_trace.steps must be a list");
  for (const auto &s : steps) {
    if (!s.is_string())
      throw Error("exploit_trace.steps entries must be strings");
    f.exploit_trace.steps.push_back(s.get<std::string>());
  }
  const auto &r = detail::field(j, "remediation");
  f.remediation.recommendation = detail::text_field(r, "recommendation");
  f.remediation.preserves_functionality_note =
      detail::text_field(r, "preserves_functionality_note");
  if (r.contains("patched_snippet") && !r.at("patched_snippet").is_null())
    f.remediation.patched_snippet = detail::text_field(r, "patched_snippet");
  return f;
}

inline DetectionReport detection_from_json(const json &j) {
  DetectionReport d;
  d.component_id = detail::text_field(j, "component_id");
  d.summary = detail::text_field(j, "summary");
  d.backend_id = detail::text_field(j, "backend_id");
  d.raw_response_digest = detail::text_field(j, "raw_response_digest");
  const auto &fs = detail::field(j, "findings");
  if (!fs.is_array())
    throw Error("findings must be a list");
  for (const auto &f : fs)
    d.findings.push_back(finding_from_json(f));
  return d;
}

/// Empty string when the finding satisfies its invariants, else the reason.
inline std::string check_finding(const Finding &f) {
  if (is_blank(f.title)) return "title is blank";
  if (is_blank(f.explanation)) return "explanation is blank";
  if (f.score != cvss::base_score(f.severity_vector))
    return "score does not match vector";
  if (is_blank(f.exploit_trace.entry_point)) return "exploit_trace.entry_point is blank";
  if (f.exploit_trace.steps.empty()) return "exploit_trace.steps is empty";
  for (const auto &s : f.exploit_trace.steps)
    if (is_blank(s)) return "exploit_trace step is blank";
  if (is_blank(f.exploit_trace.impact)) return "exploit_trace.impact is blank";
  if (is_blank(f.remediation.recommendation)) return "remediation.recommendation is blank";
  if (is_blank(f.remediation.preserves_functionality_note))
    return "remediation.preserves_functionality_note is blank";
  return {};
}

// ---------------------------------------------------------------------------
// Prompts

struct PromptTemplates {
  std::string system;
  std::string summarize;
  std::string analyze;
  std::string repair;
  std::string response_schema; ///< JSON schema text for analyze responses

  /// "1.<8 hex>"; changes whenever any template text changes.
  [[nodiscard]] std::string version() const {
    return "1." + sha256_hex(system + '\0' + summarize + '\0' + analyze + '\0' +
                             repair + '\0' + response_schema)
                      .substr(0, 8);
  }
};

struct Prompt {
  std::string system;
  std::string user;
  [[nodiscard]] std::size_t estimated_tokens() const {
    return estimate_tokens(system) + estimate_tokens(user);
  }
};

inline std::string fill_template(std::string_view tmpl,
                                 const std::vector<std::pair<std::string, std::string>> &vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    auto open = tmpl.find("{{", i);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    out.append(tmpl.substr(i, open - i));
    auto key = trim(tmpl.substr(open + 2, close - open - 2));
    auto it = std::find_if(vars.begin(), vars.end(),
                           [&](const auto &kv) { return kv.first == key; });
    if (it != vars.end())
      out.append(it->second);
    else
      out.append(tmpl.substr(open, close + 2 - open));
    i = close + 2;
  }
  return out;
}

inline std::string format_indicators(const std::vector<Indicator> &indicators) {
  if (indicators.empty())
    return "(none)";
  std::string out;
  for (const auto &ind : indicators) {
    out += "- " + ind.rule_id + " [" + std::string(to_string(ind.category)) +
           "] line " + std::to_string(ind.line) + ": " + ind.excerpt + "\n";
  }
  return out;
}

inline Prompt render_prompt(const PromptTemplates &t, const BackendRequest &req) {
  std::vector<std::pair<std::string, std::string>> vars = {
      {"language", std::string(display_name(req.language))},
      {"kind", std::string(to_string(req.component.kind))},
      {"name", req.component.name},
      {"path", req.component.path},
      {"line_start", std::to_string(req.component.line_start)},
      {"line_end", std::to_string(req.component.line_end)},
      {"source", req.component.source},
      {"indicators", format_indicators(req.indicators)},
      {"summary", req.summary.value_or("(not available)")},
      {"categories", [] {
         std::string s;
         for (auto c : kAllCategories) {
           if (!s.empty())
             s += ", ";
           s += to_string(c);
         }
         return s;
       }()},
      {"response_schema", t.response_schema},
  };
  Prompt p;
  p.system = fill_template(t.system, vars);
  p.user = fill_template(req.task == Task::summarize ? t.summarize : t.analyze, vars);
  return p;
}

/// Common contract for the deterministic rule backend and the model client.
class Backend {
public:
  virtual ~Backend() = default;
  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual std::string template_version() const = 0;
  /// Estimated prompt tokens for `req`; used for budget checks and chunking.
  [[nodiscard]] virtual std::size_t estimate_request_tokens(const BackendRequest &req) const = 0;
  virtual std::string summarize(const BackendRequest &req) = 0;
  virtual DetectionReport analyze(const BackendRequest &req) = 0;
};

} // namespace malscan
