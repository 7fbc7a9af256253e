#pragma once

#include "malscan/assets.hpp"
#include "malscan/backend.hpp"
#include "malscan/json_schema.hpp"

#include <array>
#include <ctime>
#include <optional>
#include <string>
#include <vector>

namespace malscan {

inline constexpr std::string_view kSchemaVersion = "1.0";
inline constexpr std::string_view kFixedTimestamp = "1970-01-01T00:00:00Z";

enum class OutcomeStatus { analyzed, skipped_low_risk, degraded_backend_error };

inline std::string_view to_string(OutcomeStatus s) {
  switch (s) {
  case OutcomeStatus::analyzed: return "analyzed";
  case OutcomeStatus::skipped_low_risk: return "skipped_low_risk";
  case OutcomeStatus::degraded_backend_error: return "degraded_backend_error";
  }
  return "";
}

inline std::optional<OutcomeStatus> parse_status(std::string_view s) {
  if (s == "analyzed") return OutcomeStatus::analyzed;
  if (s == "skipped_low_risk") return OutcomeStatus::skipped_low_risk;
  if (s == "degraded_backend_error") return OutcomeStatus::degraded_backend_error;
  return std::nullopt;
}

struct ComponentOutcome {
  CodeComponent component;
  PrescoreResult prescore;
  std::optional<DetectionReport> detection; ///< present iff status == analyzed
  OutcomeStatus status = OutcomeStatus::skipped_low_risk;
  std::optional<std::string> error;         ///< backend failure message
};

struct FileSection {
  std::string path;
  LanguageId language = LanguageId::unknown;
  std::string content_hash;
  std::vector<std::string> warnings;
  std::vector<ComponentOutcome> components;
};

struct ScanError {
  std::string path;
  std::string message;
};

struct Totals {
  std::size_t files = 0;
  std::size_t components = 0;
  std::size_t analyzed = 0;
  std::size_t skipped = 0;
  std::size_t degraded = 0;
  std::size_t findings = 0;
  std::array<std::size_t, 5> by_severity{}; ///< indexed by cvss::Severity

  friend bool operator==(const Totals &, const Totals &) = default;
};

struct ScanReport {
  std::string schema_version = std::string(kSchemaVersion);
  std::string tool_version = std::string(kToolVersion);
  std::string template_version;
  std::string backend_id;
  std::string started_at = std::string(kFixedTimestamp);
  std::string finished_at = std::string(kFixedTimestamp);
  std::string config_digest;
  std::string rule_set_digest;
  std::vector<FileSection> files;
  std::vector<ScanError> errors;
  Totals totals;
};

/// Thrown when a stored report cannot be read back.
class ReportInvalid : public Error {
public:
  using Error::Error;
};

inline std::string utc_timestamp(std::time_t t = std::time(nullptr)) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Totals compute_totals(const ScanReport &r) {
  Totals t;
  t.files = r.files.size();
  for (const auto &f : r.files) {
    for (const auto &o : f.components) {
      ++t.components;
      switch (o.status) {
      case OutcomeStatus::analyzed: ++t.analyzed; break;
      case OutcomeStatus::skipped_low_risk: ++t.skipped; break;
      case OutcomeStatus::degraded_backend_error: ++t.degraded; break;
      }
      if (!o.detection)
        continue;
      for (const auto &fd : o.detection->findings) {
        ++t.findings;
        ++t.by_severity[static_cast<std::size_t>(fd.score.severity())];
      }
    }
  }
  return t;
}

/// Sorts files by path, components by span, findings by score.
inline void normalize(ScanReport &r) {
  std::sort(r.files.begin(), r.files.end(),
            [](const FileSection &a, const FileSection &b) { return a.path < b.path; });
  for (auto &f : r.files) {
    std::sort(f.components.begin(), f.components.end(),
              [](const ComponentOutcome &a, const ComponentOutcome &b) {
                const auto &x = a.component.span;
                const auto &y = b.component.span;
                if (x.start != y.start)
                  return x.start < y.start;
                if (x.end != y.end)
                  return x.end > y.end;
                return a.component.id < b.component.id;
              });
    for (auto &o : f.components)
      if (o.detection)
        sort_findings(o.detection->findings);
  }
  std::sort(r.errors.begin(), r.errors.end(), [](const ScanError &a, const ScanError &b) {
    return std::tie(a.path, a.message) < std::tie(b.path, b.message);
  });
  r.totals = compute_totals(r);
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline json span_json(ByteSpan s) { return {{"start", s.start}, {"end", s.end}}; }

inline json optional_text(const std::optional<std::string> &s) {
  return s ? json(*s) : json(nullptr);
}

inline json totals_json(const Totals &t) {
  json sev = json::object();
  for (std::size_t i = 0; i < t.by_severity.size(); ++i)
    sev[std::string(cvss::to_string(static_cast<cvss::Severity>(i)))] = t.by_severity[i];
  return {{"files", t.files},         {"components", t.components},
          {"analyzed", t.analyzed},   {"skipped", t.skipped},
          {"degraded", t.degraded},   {"findings", t.findings},
          {"findings_by_severity", std::move(sev)}};
}

inline json component_json(const CodeComponent &c) {
  return {{"id", c.id},
          {"kind", to_string(c.kind)},
          {"name", c.name},
          {"span", span_json(c.span)},
          {"line_start", c.line_start},
          {"line_end", c.line_end},
          {"parent_id", optional_text(c.parent_id)},
          {"summary", optional_text(c.summary)}};
}

inline json indicator_json(const Indicator &i) {
  return {{"rule_id", i.rule_id},
          {"category", to_string(i.category)},
          {"span", span_json(i.span)},
          {"line", i.line},
          {"excerpt", i.excerpt},
          {"cvss_vector", cvss::render(i.vector)}};
}

inline json prescore_json(const PrescoreResult &p) {
  json inds = json::array();
  for (const auto &i : p.indicators)
    inds.push_back(indicator_json(i));
  return {{"score", p.score.value()},
          {"severity", to_string(p.score.severity())},
          {"flagged", p.flagged},
          {"indicators", std::move(inds)},
          {"warnings", p.warnings}};
}

} // namespace detail

inline json to_json_value(const ScanReport &r) {
  json files = json::array();
  for (const auto &f : r.files) {
    json comps = json::array();
    for (const auto &o : f.components) {
      comps.push_back({{"component", detail::component_json(o.component)},
                       {"prescore", detail::prescore_json(o.prescore)},
                       {"status", to_string(o.status)},
                       {"detection", o.detection ? to_json(*o.detection) : json(nullptr)},
                       {"error", detail::optional_text(o.error)}});
    }
    files.push_back({{"path", f.path},
                     {"language", to_string(f.language)},
                     {"content_hash", f.content_hash},
                     {"warnings", f.warnings},
                     {"components", std::move(comps)}});
  }
  json errors = json::array();
  for (const auto &e : r.errors)
    errors.push_back({{"path", e.path}, {"message", e.message}});
  return {{"schema_version", r.schema_version},
          {"tool_version", r.tool_version},
          {"template_version", r.template_version},
          {"backend_id", r.backend_id},
          {"started_at", r.started_at},
          {"finished_at", r.finished_at},
          {"config_digest", r.config_digest},
          {"rule_set_digest", r.rule_set_digest},
          {"files", std::move(files)},
          {"errors", std::move(errors)},
          {"totals", detail::totals_json(r.totals)}};
}

/// Canonical text: sorted keys, two-space indent, trailing newline.
inline std::string canonical_json(const json &j) {
  return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

inline std::string to_json(const ScanReport &r) { return canonical_json(to_json_value(r)); }

inline const JsonSchema &report_schema() {
  static const JsonSchema schema = JsonSchema::parse(assets::report_schema());
  return schema;
}

namespace detail {

inline ByteSpan span_from(const json &j) {
  return {j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()};
}

inline std::optional<std::string> optional_from(const json &j) {
  if (j.is_null())
    return std::nullopt;
  return j.get<std::string>();
}

inline Indicator indicator_from(const json &j) {
  Indicator i;
  i.rule_id = j.at("rule_id").get<std::string>();
  i.category = *parse_category(j.at("category").get<std::string>());
  i.span = span_from(j.at("span"));
  i.line = j.at("line").get<std::size_t>();
  i.excerpt = j.at("excerpt").get<std::string>();
  i.vector = cvss::parse_vector(j.at("cvss_vector").get<std::string>());
  return i;
}

inline Totals totals_from(const json &j) {
  Totals t;
  t.files = j.at("files").get<std::size_t>();
  t.components = j.at("components").get<std::size_t>();
  t.analyzed = j.at("analyzed").get<std::size_t>();
  t.skipped = j.at("skipped").get<std::size_t>();
  t.degraded = j.at("degraded").get<std::size_t>();
  t.findings = j.at("findings").get<std::size_t>();
  for (std::size_t i = 0; i < t.by_severity.size(); ++i)
    t.by_severity[i] = j.at("findings_by_severity")
                           .at(std::string(cvss::to_string(static_cast<cvss::Severity>(i))))
                           .get<std::size_t>();
  return t;
}

} // namespace detail

/// Reads a report produced by to_json. Rejects other schema versions,
/// schema violations and totals that disagree with the body.
inline ScanReport report_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ReportInvalid(std::string("report is not valid JSON: ") + e.what());
  }
  if (!j.is_object())
    throw ReportInvalid("report must be a JSON object");
  if (!j.contains("schema_version") || j["schema_version"] != kSchemaVersion)
    throw ReportInvalid("unsupported report schema_version " +
                        (j.contains("schema_version") ? j["schema_version"].dump()
                                                      : std::string("(missing)")) +
                        ", expected \"" + std::string(kSchemaVersion) + "\"");
  auto errors = report_schema().validate(j);
  if (!errors.empty())
    throw ReportInvalid("report does not match schema: " + errors.front());

  ScanReport r;
  try {
    r.schema_version = j.at("schema_version").get<std::string>();
    r.tool_version = j.at("tool_version").get<std::string>();
    r.template_version = j.at("template_version").get<std::string>();
    r.backend_id = j.at("backend_id").get<std::string>();
    r.started_at = j.at("started_at").get<std::string>();
    r.finished_at = j.at("finished_at").get<std::string>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.rule_set_digest = j.at("rule_set_digest").get<std::string>();
    for (const auto &e : j.at("errors"))
      r.errors.push_back({e.at("path").get<std::string>(), e.at("message").get<std::string>()});
    for (const auto &fj : j.at("files")) {
      FileSection f;
      f.path = fj.at("path").get<std::string>();
      f.language = *parse_language(fj.at("language").get<std::string>());
      f.content_hash = fj.at("content_hash").get<std::string>();
      f.warnings = fj.at("warnings").get<std::vector<std::string>>();
      for (const auto &oj : fj.at("components")) {
        ComponentOutcome o;
        const auto &cj = oj.at("component");
        auto &c = o.component;
        c.id = cj.at("id").get<std::string>();
        c.kind = *parse_component_kind(cj.at("kind").get<std::string>());
        c.name = cj.at("name").get<std::string>();
        c.span = detail::span_from(cj.at("span"));
        c.line_start = cj.at("line_start").get<std::size_t>();
        c.line_end = cj.at("line_end").get<std::size_t>();
        c.parent_id = detail::optional_from(cj.at("parent_id"));
        c.summary = detail::optional_from(cj.at("summary"));
        c.language = f.language;
        c.path = f.path;
        const auto &pj = oj.at("prescore");
        o.prescore.component_id = c.id;
        o.prescore.score = cvss::Score::from_decimal(pj.at("score").get<double>());
        o.prescore.flagged = pj.at("flagged").get<bool>();
        o.prescore.warnings = pj.at("warnings").get<std::vector<std::string>>();
        for (const auto &ij : pj.at("indicators"))
          o.prescore.indicators.push_back(detail::indicator_from(ij));
        o.status = *parse_status(oj.at("status").get<std::string>());
        if (!oj.at("detection").is_null())
          o.detection = detection_from_json(oj.at("detection"));
        o.error = detail::optional_from(oj.at("error"));
        if (o.detection.has_value() != (o.status == OutcomeStatus::analyzed))
          throw ReportInvalid("component " + c.id + ": detection must be present exactly when status is analyzed");
        f.components.push_back(std::move(o));
      }
      r.files.push_back(std::move(f));
    }
    r.totals = detail::totals_from(j.at("totals"));
  } catch (const ReportInvalid &) {
    throw;
  } catch (const std::exception &e) {
    throw ReportInvalid(std::string("report content is inconsistent: ") + e.what());
  }
  if (compute_totals(r) != r.totals)
    throw ReportInvalid("report totals do not match its body");
  return r;
}

/// Schema and totals problems of an in-memory report; empty when valid.
inline std::vector<std::string> validate_report(const ScanReport &r) {
  auto errors = report_schema().validate(to_json_value(r));
  if (compute_totals(r) != r.totals)
    errors.push_back("/totals: do not match the report body");
  return errors;
}

/// 2 on scan-level errors, 1 if any finding scores >= fail_threshold, else 0.
inline int exit_code(const ScanReport &r, double fail_threshold) {
  if (!r.errors.empty())
    return 2;
  for (const auto &f : r.files)
    for (const auto &o : f.components)
      if (o.detection)
        for (const auto &fd : o.detection->findings)
          if (meets_threshold(fd.score, fail_threshold))
            return 1;
  return 0;
}

// ---------------------------------------------------------------------------
// Markdown

namespace detail {

inline std::string code_span(std::string_view s) {
  std::string text(s);
  for (auto &ch : text)
    if (ch == '\n' || ch == '\r' || ch == '\t')
      ch = ' ';
  std::size_t longest = 0, run = 0;
  for (char ch : text) {
    run = ch == '`' ? run + 1 : 0;
    longest = std::max(longest, run);
  }
  std::string fence(longest + 1, '`');
  bool pad = !text.empty() && (text.front() == '`' || text.back() == '`');
  return fence + (pad ? " " : "") + text + (pad ? " " : "") + fence;
}

inline std::string code_block(std::string_view code, std::string_view lang) {
  std::size_t longest = 0, run = 0;
  for (char ch : code) {
    run = ch == '`' ? run + 1 : 0;
    longest = std::max(longest, run);
  }
  std::string fence(std::max<std::size_t>(3, longest + 1), '`');
  std::string out = fence + std::string(lang) + "\n" + std::string(code);
  if (out.back() != '\n')
    out += '\n';
  return out + fence + "\n";
}

inline std::string one_line(std::string_view s) {
  std::string out;
  for (char ch : s)
    out += (ch == '\n' || ch == '\r') ? ' ' : ch;
  return out;
}

} // namespace detail

inline std::string to_markdown(const ScanReport &r) {
  const auto &t = r.totals;
  std::string md = "# Security scan report\n\n";
  md += "- Tool version: " + r.tool_version + "\n";
  md += "- Backend: " + r.backend_id + " (templates " + r.template_version + ")\n";
  md += "- Started: " + r.started_at + ", finished: " + r.finished_at + "\n";
  md += "- Files: " + std::to_string(t.files) + ", components: " + std::to_string(t.components) +
        " (analyzed " + std::to_string(t.analyzed) + ", skipped " + std::to_string(t.skipped) +
        ", degraded " + std::to_string(t.degraded) + ")\n";
  md += "- Findings: " + std::to_string(t.findings);
  if (t.findings > 0) {
    std::string parts;
    for (int i = 4; i >= 0; --i) {
      if (t.by_severity[i] == 0)
        continue;
      if (!parts.empty())
        parts += ", ";
      parts += std::string(cvss::to_string(static_cast<cvss::Severity>(i))) + " " +
               std::to_string(t.by_severity[i]);
    }
    md += " (" + parts + ")";
  }
  md += "\n\n";
  if (t.analyzed == 0)
    md += "No components analyzed.\n\n";

  if (!r.errors.empty()) {
    md += "## Scan errors\n\n";
    for (const auto &e : r.errors)
      md += "- " + detail::code_span(e.path) + ": " + detail::one_line(e.message) + "\n";
    md += "\n";
  }

  for (const auto &f : r.files) {
    md += "## " + detail::code_span(f.path) + " (" + std::string(display_name(f.language)) + ")\n\n";
    for (const auto &w : f.warnings)
      md += "> Warning: " + detail::one_line(w) + "\n";
    if (!f.warnings.empty())
      md += "\n";
    if (f.components.empty())
      md += "No components.\n\n";
    for (const auto &o : f.components) {
      const auto &c = o.component;
      md += "### " + std::string(to_string(c.kind)) + " " + detail::code_span(c.name) +
            " (lines " + std::to_string(c.line_start) + "-" + std::to_string(c.line_end) +
            ", bytes " + std::to_string(c.span.start) + "-" + std::to_string(c.span.end) + ")\n\n";
      md += "- Status: " + std::string(to_string(o.status)) + "\n";
      if (c.summary)
        md += "- Summary: " + detail::one_line(*c.summary) + "\n";
      md += "- Prescore: " + o.prescore.score.str() + " (" +
            std::string(cvss::to_string(o.prescore.score.severity())) + ")" +
            (o.prescore.flagged ? ", flagged" : "") + "\n";
      for (const auto &ind : o.prescore.indicators)
        md += "  - " + detail::code_span(ind.rule_id) + " at line " + std::to_string(ind.line) +
              ": " + detail::code_span(ind.excerpt) + "\n";
      for (const auto &w : o.prescore.warnings)
        md += "  - Warning: " + detail::one_line(w) + "\n";
      if (o.error)
        md += "- Backend error: " + detail::one_line(*o.error) + "\n";
      md += "\n";
      if (!o.detection)
        continue;
      if (o.detection->findings.empty()) {
        md += "No vulnerabilities found.\n\n";
        continue;
      }
      for (const auto &fd : o.detection->findings) {
        auto sev = std::string(cvss::to_string(fd.score.severity()));
        md += "#### [" + sev + " " + fd.score.str() + "] " + detail::one_line(fd.title) + "\n\n";
        md += "- Category: " + std::string(display_name(fd.category)) + "\n";
        md += "- CVSS: " + detail::code_span(cvss::render(fd.severity_vector)) + "\n";
        md += "- Confidence: " + std::string(to_string(fd.confidence)) + "\n\n";
        md += fd.explanation + "\n\n";
        md += "**Exploit trace**\n\n";
        std::size_t n = 1;
        md += std::to_string(n++) + ". Entry point: " + detail::one_line(fd.exploit_trace.entry_point) + "\n";
        for (const auto &s : fd.exploit_trace.steps)
          md += std::to_string(n++) + ". " + detail::one_line(s) + "\n";
        md += std::to_string(n++) + ". Impact: " + detail::one_line(fd.exploit_trace.impact) + "\n\n";
        md += "**Remediation**\n\n" + fd.remediation.recommendation + "\n\n";
        if (fd.remediation.patched_snippet)
          md += detail::code_block(*fd.remediation.patched_snippet, to_string(f.language)) + "\n";
        md += "Behaviour preserved: " + fd.remediation.preserves_functionality_note + "\n\n";
      }
    }
  }
  return md;
}

} // namespace malscan
