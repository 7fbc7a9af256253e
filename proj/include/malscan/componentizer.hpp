#pragma once

#include "malscan/common.hpp"
#include "malscan/language.hpp"
#include "malscan/lexer.hpp"
#include "malscan/source_file.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace malscan {

enum class ComponentKind { function, method, class_, module_fragment };

inline std::string_view to_string(ComponentKind kind) {
  switch (kind) {
  case ComponentKind::function: return "function";
  case ComponentKind::method: return "method";
  case ComponentKind::class_: return "class";
  case ComponentKind::module_fragment: return "module_fragment";
  }
  return "module_fragment";
}

inline std::optional<ComponentKind> parse_component_kind(std::string_view s) {
  if (s == "function") return ComponentKind::function;
  if (s == "method") return ComponentKind::method;
  if (s == "class") return ComponentKind::class_;
  if (s == "module_fragment") return ComponentKind::module_fragment;
  return std::nullopt;
}

struct CodeComponent {
  std::string id;
  ComponentKind kind = ComponentKind::module_fragment;
  std::string name;
  ByteSpan span;
  std::optional<std::string> parent_id;
  std::string source;
  std::optional<std::string> summary;
  LanguageId language = LanguageId::unknown;
  std::string path;
  std::size_t line_start = 1;
  std::size_t line_end = 1;
};

inline constexpr std::size_t kDefaultFragmentBytes = 8 * 1024;

/// Stable identifier: digest of (path, span, kind).
inline std::string component_id(std::string_view path, ByteSpan span,
                                ComponentKind kind) {
  std::string key(path);
  key += '\0';
  key += std::to_string(span.start) + "-" + std::to_string(span.end);
  key += '\0';
  key += to_string(kind);
  return sha256_hex(key).substr(0, 16);
}

inline CodeComponent make_component(const SourceFile &file, ComponentKind kind,
                                    std::string name, ByteSpan span,
                                    std::optional<std::string> parent_id = {}) {
  CodeComponent c;
  c.kind = kind;
  c.span = span;
  c.id = component_id(file.path, span, kind);
  c.name = std::move(name);
  c.parent_id = std::move(parent_id);
  c.source = file.content.substr(span.start, span.size());
  c.language = file.language;
  c.path = file.path;
  c.line_start = line_of(file.content, span.start);
  c.line_end = line_of(file.content, span.end - 1);
  return c;
}

namespace detail {

inline std::string fragment_name(std::size_t start) {
  return "fragment@" + std::to_string(start);
}

inline std::string anonymous_name(std::size_t start) {
  return "anonymous@" + std::to_string(start);
}

/// Splits [pos, n) at the preferred boundary no later than pos + max_bytes.
inline std::size_t fragment_cut(std::string_view text, std::size_t pos,
                                std::size_t max_bytes) {
  const std::size_t n = text.size();
  if (n - pos <= max_bytes)
    return n;
  const std::size_t limit = pos + max_bytes;
  // End of a blank line: text[p-1] == '\n' and the line before it is empty
  // or whitespace only.
  for (std::size_t p = limit; p > pos + 1; --p) {
    if (text[p - 1] != '\n')
      continue;
    std::size_t q = p - 1;
    while (q > pos && text[q - 1] != '\n' && is_space(text[q - 1]))
      --q;
    if (q > pos && text[q - 1] == '\n')
      return p;
  }
  for (std::size_t p = limit; p > pos; --p)
    if (text[p - 1] == '\n')
      return p;
  std::size_t cut = utf8_floor(text, limit);
  return cut > pos ? cut : limit;
}

struct Decl {
  ComponentKind kind = ComponentKind::function;
  std::string name;
  ByteSpan span;
  std::vector<Decl> methods;
};

inline bool is_control_keyword(std::string_view w) {
  static constexpr std::array<std::string_view, 33> kWords = {
      "if",     "for",    "while",  "switch",  "catch",        "return",
      "else",   "do",     "try",    "synchronized", "using",   "lock",
      "foreach", "with",  "sizeof", "new",     "fixed",        "when",
      "guard",  "until",  "unless", "elif",    "match",        "select",
      "defer",  "go",     "throw",  "typeof",  "await",        "yield",
      "case",   "delete", "in"};
  return std::find(kWords.begin(), kWords.end(), w) != kWords.end();
}

/// Blanks the contents of (), [] and {} groups so only depth-0 text remains.
inline std::string flatten(std::string_view s) {
  std::string out(s);
  int depth = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    char c = out[i];
    if (c == '(' || c == '[' || c == '{') {
      if (depth++ > 0)
        out[i] = ' ';
    } else if (c == ')' || c == ']' || c == '}') {
      if (depth > 0 && --depth > 0)
        out[i] = ' ';
    } else if (depth > 0) {
      out[i] = ' ';
    }
  }
  return out;
}

inline std::string collapse_ws(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (is_space(c)) {
      space = !out.empty();
      continue;
    }
    if (space)
      out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

/// Index just past a balanced group starting at `open` (which holds `o`).
inline std::size_t skip_group(std::string_view s, std::size_t open, char o,
                              char c) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == o)
      ++depth;
    else if (s[i] == c && --depth == 0)
      return i + 1;
  }
  return s.size();
}

/// Removes leading annotations, attributes, template prefixes and PHP tags.
inline std::string strip_decorations(std::string h, LanguageId lang) {
  static const std::regex kPubRestricted(R"(\bpub\s*\([^)]*\))");
  if (lang == LanguageId::rust)
    h = std::regex_replace(h, kPubRestricted, "pub");
  for (bool changed = true; changed;) {
    changed = false;
    std::string_view v = trim(h);
    if (v.empty())
      break;
    std::size_t cut = 0;
    if (v.substr(0, 5) == "<?php") {
      cut = 5;
    } else if (v.substr(0, 2) == "<?") {
      cut = 2;
    } else if (v.substr(0, 2) == "#[" || v.substr(0, 2) == "[[") {
      cut = skip_group(v, 0, '[', ']');
    } else if (v[0] == '[' && lang == LanguageId::csharp) {
      cut = skip_group(v, 0, '[', ']');
    } else if (v[0] == '@' && v.substr(0, 10) != "@interface") {
      std::size_t j = 1;
      while (j < v.size() && (is_ident_char(v[j]) || v[j] == '.'))
        ++j;
      std::size_t k = j;
      while (k < v.size() && is_space(v[k]))
        ++k;
      if (k < v.size() && v[k] == '(')
        j = skip_group(v, k, '(', ')');
      cut = j;
    } else if (v.substr(0, 8) == "template") {
      std::size_t k = 8;
      while (k < v.size() && is_space(v[k]))
        ++k;
      if (k < v.size() && v[k] == '<')
        cut = skip_group(v, k, '<', '>');
    }
    if (cut > 0) {
      h = std::string(trim(v.substr(cut)));
      changed = true;
    }
  }
  return std::string(trim(h));
}

/// Identifier chain ending right before position `end` in `s`, skipping a
/// trailing generic argument list.
inline std::string ident_before(std::string_view s, std::size_t end,
                                std::string_view extra = ":~$.") {
  std::size_t j = end;
  while (j > 0 && is_space(s[j - 1]))
    --j;
  if (j > 0 && s[j - 1] == '>') {
    int depth = 0;
    while (j > 0) {
      char c = s[--j];
      if (c == '>')
        ++depth;
      else if (c == '<' && --depth == 0)
        break;
    }
    while (j > 0 && is_space(s[j - 1]))
      --j;
  }
  std::size_t stop = j;
  while (j > 0 && (is_ident_char(s[j - 1]) ||
                   extra.find(s[j - 1]) != std::string_view::npos))
    --j;
  std::string out(s.substr(j, stop - j));
  while (!out.empty() && (out.front() == '.' || out.front() == ':'))
    out.erase(out.begin());
  return out;
}

inline std::string ident_at(std::string_view s, std::size_t pos,
                            std::string_view extra = ":$.") {
  while (pos < s.size() && is_space(s[pos]))
    ++pos;
  if (pos < s.size() && s[pos] == '<') {
    pos = skip_group(s, pos, '<', '>');
    while (pos < s.size() && is_space(s[pos]))
      ++pos;
  }
  std::size_t j = pos;
  while (j < s.size() && (is_ident_char(s[j]) ||
                          extra.find(s[j]) != std::string_view::npos))
    ++j;
  std::string out(s.substr(pos, j - pos));
  while (!out.empty() && (out.back() == '.' || out.back() == ':'))
    out.pop_back();
  return out;
}

/// Finds `word` as a whole token in `s` at or after `from`.
inline std::size_t find_word(std::string_view s, std::string_view word,
                             std::size_t from = 0) {
  for (std::size_t p = s.find(word, from); p != std::string_view::npos;
       p = s.find(word, p + 1)) {
    bool left = p == 0 || !(is_ident_char(s[p - 1]) || s[p - 1] == '$');
    bool right = p + word.size() >= s.size() ||
                 !(is_ident_char(s[p + word.size()]) || s[p + word.size()] == '$');
    if (left && right)
      return p;
  }
  return std::string_view::npos;
}

enum class HeaderClass { residual, function, class_, transparent };

struct HeaderInfo {
  HeaderClass cls = HeaderClass::residual;
  std::string name;
};

inline std::string_view fn_keyword(LanguageId lang) {
  switch (lang) {
  case LanguageId::rust: return "fn";
  case LanguageId::go: return "func";
  case LanguageId::swift: return "func";
  case LanguageId::kotlin: return "fun";
  case LanguageId::scala: return "def";
  case LanguageId::php:
  case LanguageId::javascript:
  case LanguageId::typescript: return "function";
  default: return {};
  }
}

inline std::vector<std::string_view> class_keywords(LanguageId lang) {
  switch (lang) {
  case LanguageId::c: return {"struct", "union", "enum"};
  case LanguageId::cpp: return {"class", "struct", "union", "enum"};
  case LanguageId::java: return {"class", "interface", "enum", "record"};
  case LanguageId::csharp:
    return {"class", "struct", "interface", "enum", "record"};
  case LanguageId::rust: return {"struct", "enum", "trait", "impl", "union"};
  case LanguageId::go: return {"struct", "interface"};
  case LanguageId::scala: return {"class", "object", "trait", "enum"};
  case LanguageId::kotlin: return {"class", "object", "interface"};
  case LanguageId::swift:
    return {"class", "struct", "enum", "protocol", "extension", "actor"};
  case LanguageId::javascript: return {"class"};
  case LanguageId::typescript: return {"class", "interface", "enum"};
  case LanguageId::php: return {"class", "interface", "trait", "enum"};
  default: return {};
  }
}

inline bool c_style_functions(LanguageId lang) {
  switch (lang) {
  case LanguageId::c:
  case LanguageId::cpp:
  case LanguageId::java:
  case LanguageId::csharp:
  case LanguageId::javascript:
  case LanguageId::typescript:
  case LanguageId::swift:
  case LanguageId::kotlin:
    return true;
  default:
    return false;
  }
}

inline bool newline_terminated(LanguageId lang) {
  switch (lang) {
  case LanguageId::go:
  case LanguageId::kotlin:
  case LanguageId::scala:
  case LanguageId::swift:
  case LanguageId::javascript:
  case LanguageId::typescript:
    return true;
  default:
    return false;
  }
}

/// Classifies the masked text in front of a `{`.
inline HeaderInfo classify_header(std::string_view masked_header,
                                  LanguageId lang, std::size_t offset) {
  HeaderInfo info;
  std::string h = strip_decorations(collapse_ws(masked_header), lang);
  if (h.empty())
    return info;
  const std::string flat = flatten(h);

  // Containers whose members are treated as top level.
  static const std::regex kNamespace(
      R"(^(export\s+)?(inline\s+)?(declare\s+)?(namespace|module)\b[^=;]*$)");
  static const std::regex kRustMod(R"(^(pub\s+)?mod\s+\w+$)");
  static const std::regex kExtern(R"(^extern\s*("\s*")?$)");
  if ((lang == LanguageId::cpp || lang == LanguageId::csharp ||
       lang == LanguageId::typescript) &&
      std::regex_search(flat, kNamespace))
    return {HeaderClass::transparent, {}};
  if (lang == LanguageId::rust && std::regex_search(flat, kRustMod))
    return {HeaderClass::transparent, {}};
  if ((lang == LanguageId::c || lang == LanguageId::cpp) &&
      std::regex_search(flat, kExtern))
    return {HeaderClass::transparent, {}};

  // `const f = (...) => {`, `exports.f = function (...) {`
  if (lang == LanguageId::javascript || lang == LanguageId::typescript) {
    static const std::regex kAssign(
        R"(^(?:export\s+)?(?:default\s+)?(?:(?:static|public|private|protected|readonly)\s+)*(?:(?:const|let|var)\s+)?([A-Za-z_$][\w$.]*)\s*(?::[^=]+)?=\s*(?:async\s+)?)");
    static const std::regex kFunctionExpr(R"(^function\b\s*\*?\s*([A-Za-z_$][\w$]*)?)");
    static const std::regex kBareArrow(R"(^[A-Za-z_$][\w$]*\s*=>\s*$)");
    std::smatch m;
    if (std::regex_search(h, m, kAssign)) {
      std::string name = m[1].str();
      std::string rest = m.suffix().str();
      std::smatch f;
      if (std::regex_search(rest, f, kFunctionExpr))
        return {HeaderClass::function, f[1].matched ? f[1].str() : name};
      if (std::regex_search(rest, kBareArrow))
        return {HeaderClass::function, name};
      // `<T>(params): Ret =>`
      std::size_t p = 0;
      if (!rest.empty() && rest[0] == '<') {
        int depth = 0;
        for (; p < rest.size(); ++p) {
          if (rest[p] == '<')
            ++depth;
          else if (rest[p] == '>' && --depth == 0)
            break;
        }
        p = p < rest.size() ? p + 1 : p;
        while (p < rest.size() && is_space(rest[p]))
          ++p;
      }
      if (p < rest.size() && rest[p] == '(') {
        auto close = skip_group(rest, p, '(', ')');
        auto tail = trim(std::string_view(rest).substr(std::min(close, rest.size())));
        if (tail.ends_with("=>"))
          return {HeaderClass::function, name};
      }
    }
  }

  // Class-like declarations.
  const auto first_paren = flat.find('(');
  const auto first_eq = [&] {
    for (std::size_t p = flat.find('='); p != std::string::npos;
         p = flat.find('=', p + 1)) {
      bool arrow = p + 1 < flat.size() && flat[p + 1] == '>';
      if (!arrow)
        return p;
    }
    return std::string::npos;
  }();
  bool go_type = lang == LanguageId::go && flat.rfind("type ", 0) == 0;
  if (lang != LanguageId::go || go_type) {
    std::size_t best = std::string::npos;
    std::string_view best_kw;
    for (auto kw : class_keywords(lang)) {
      auto p = find_word(flat, kw);
      if (p < best) {
        best = p;
        best_kw = kw;
      }
    }
    bool c_like = lang == LanguageId::c || lang == LanguageId::cpp;
    bool before_paren = best < first_paren;
    if (c_like)
      before_paren = first_paren == std::string::npos;
    bool prefix_ok = best != std::string::npos && best < first_eq;
    if (best != std::string::npos && prefix_ok && before_paren) {
      std::string name;
      if (go_type) {
        name = ident_at(flat, 5);
      } else if (best_kw == "impl") {
        auto for_pos = find_word(flat, "for", best);
        name = ident_at(flat, for_pos != std::string::npos ? for_pos + 3
                                                           : best + 4);
      } else {
        std::size_t after = best + best_kw.size();
        // `enum class X`, `enum struct X`
        for (std::string_view extra : {"class", "struct"}) {
          auto p = find_word(flat, extra, after);
          if (p != std::string::npos && trim(std::string_view(flat).substr(after, p - after)).empty())
            after = p + extra.size();
        }
        name = ident_at(flat, after);
        if (name == "final" || name == "alignas")
          name.clear();
      }
      if (name.empty())
        name = anonymous_name(offset);
      return {HeaderClass::class_, name};
    }
  }

  // Keyword-introduced functions.
  if (auto kw = fn_keyword(lang); !kw.empty()) {
    auto p = find_word(flat, kw);
    if (lang == LanguageId::swift && p == std::string::npos) {
      for (std::string_view special : {"init", "deinit", "subscript"}) {
        auto q = find_word(flat, special);
        if (q != std::string::npos && q < first_eq) {
          bool prefix_plain = std::all_of(flat.begin(), flat.begin() + q, [](char c) {
            return is_ident_char(c) || is_space(c);
          });
          if (prefix_plain)
            return {HeaderClass::function, std::string(special)};
        }
      }
    }
    if (p != std::string::npos) {
      bool prefix_plain = std::all_of(flat.begin(), flat.begin() + p, [](char c) {
        return is_ident_char(c) || is_space(c);
      });
      if (prefix_plain) {
        std::string name;
        for (auto q = flat.find('(', p); q != std::string::npos;
             q = flat.find('(', q + 1)) {
          auto candidate = ident_before(flat, q, ".$");
          if (!candidate.empty() && candidate != kw &&
              !candidate.ends_with(std::string(".") + std::string(kw))) {
            name = candidate;
            break;
          }
        }
        if (name.empty())
          name = ident_at(flat, p + kw.size());
        if (name.empty())
          name = anonymous_name(offset);
        return {HeaderClass::function, name};
      }
    }
  }

  // `ret name(params) qualifiers {`
  if (c_style_functions(lang) && first_paren != std::string::npos &&
      (first_eq == std::string::npos || first_eq > first_paren ||
       flat.find("operator") != std::string::npos)) {
    static const std::regex kOperator(R"(\boperator\s*([^\s(]+|\(\s*\))\s*$)");
    std::string prefix = flat.substr(0, first_paren);
    std::smatch m;
    std::string name;
    if (std::regex_search(prefix, m, kOperator)) {
      name = "operator" + m[1].str();
    } else {
      name = ident_before(flat, first_paren, ":~$");
      if (name.empty() || is_control_keyword(name) ||
          std::isdigit(static_cast<unsigned char>(name[0])))
        return info;
      // A call followed by a block (`foo.bar(x) {`) is not a declaration.
      std::string_view before = trim(std::string_view(prefix).substr(
          0, prefix.size() - std::min(prefix.size(), name.size())));
      while (!before.empty() && is_space(before.back()))
        before.remove_suffix(1);
      if (!before.empty() && (before.back() == '.' || before.back() == ',' ||
                              before.back() == '('))
        return info;
      if (prefix.find('=') != std::string::npos)
        return info;
    }
    auto after_params = skip_group(flat, first_paren, '(', ')');
    std::string_view tail = std::string_view(flat).substr(after_params);
    if (tail.find("=>") != std::string_view::npos ||
        (tail.find("->") != std::string_view::npos && lang == LanguageId::java))
      return info;
    return {HeaderClass::function, name};
  }
  return info;
}

/// Declaration finder for brace-delimited languages.
class BraceScanner {
public:
  BraceScanner(std::string_view text, std::string_view code, LanguageId lang,
               const std::string &path)
      : text_(text), code_(code), lang_(lang), path_(path) {}

  std::vector<Decl> scan(std::size_t begin, std::size_t end, bool in_class) {
    std::vector<Decl> out;
    std::size_t stmt = npos;
    int paren = 0;
    int angle = 0; // TypeScript type arguments, where `{` opens a type literal
    auto reset = [&] {
      stmt = npos;
      paren = 0;
      angle = 0;
    };
    std::size_t i = begin;
    while (i < end) {
      const char c = code_[i];
      if (stmt == npos) {
        if (is_space(text_[i])) {
          ++i;
          continue;
        }
        if (auto skip = directive_end(i, end); skip != npos) {
          i = skip;
          continue;
        }
        stmt = i;
      }
      if (c == '(' || c == '[') {
        ++paren;
      } else if (c == ')' || c == ']') {
        if (paren > 0)
          --paren;
      } else if (c == '<' && paren == 0 && lang_ == LanguageId::typescript) {
        ++angle;
      } else if (c == '>' && paren == 0 && angle > 0 && code_[i - 1] != '=') {
        --angle;
      } else if (c == '{') {
        const std::size_t close = match_brace(i, end);
        if (paren > 0 || angle > 0) {
          i = close + 1;
          continue;
        }
        HeaderInfo h = classify_header(code_.substr(stmt, i - stmt), lang_, stmt);
        if (h.cls == HeaderClass::function || h.cls == HeaderClass::class_) {
          std::size_t stop = close + 1;
          std::size_t k = stop;
          while (k < end && (code_[k] == ' ' || code_[k] == '\t'))
            ++k;
          if (k < end && code_[k] == ';')
            stop = k + 1;
          if (h.cls == HeaderClass::class_ && h.name.starts_with("anonymous@") &&
              (lang_ == LanguageId::c || lang_ == LanguageId::cpp)) {
            // typedef struct { ... } Name;
            auto semi = code_.find(';', close);
            if (semi != npos && semi < end) {
              auto name = ident_before(code_, semi, "");
              if (!name.empty()) {
                h.name = name;
                stop = semi + 1;
              }
            }
          }
          Decl d;
          d.kind = h.cls == HeaderClass::class_ ? ComponentKind::class_
                                                : ComponentKind::function;
          d.name = h.name;
          d.span = {stmt, stop};
          if (!in_class) {
            if (d.kind == ComponentKind::class_) {
              for (auto &m : scan(i + 1, close, true))
                if (m.kind == ComponentKind::function) {
                  m.kind = ComponentKind::method;
                  d.methods.push_back(std::move(m));
                }
            }
            out.push_back(std::move(d));
          } else if (d.kind == ComponentKind::function) {
            out.push_back(std::move(d));
          }
          i = stop;
          reset();
          continue;
        }
        if (h.cls == HeaderClass::transparent && !in_class) {
          for (auto &d : scan(i + 1, close, false))
            out.push_back(std::move(d));
        }
        i = close + 1;
        reset();
        continue;
      } else if (c == '}') {
        throw ParseFailure(path_, i, "unbalanced '}'");
      } else if (c == ';' && paren == 0) {
        reset();
        ++i;
        continue;
      } else if (c == ':' && paren == 0 && lang_ == LanguageId::cpp &&
                 is_access_label(stmt, i)) {
        reset();
        ++i;
        continue;
      } else if (c == '\n' && paren == 0 && newline_terminated(lang_) &&
                 ends_statement(stmt, i, end)) {
        reset();
      }
      ++i;
    }
    return out;
  }

private:
  static constexpr std::size_t npos = std::string_view::npos;

  std::size_t match_brace(std::size_t open, std::size_t end) const {
    int depth = 0;
    for (std::size_t i = open; i < end; ++i) {
      if (code_[i] == '{')
        ++depth;
      else if (code_[i] == '}' && --depth == 0)
        return i;
    }
    throw ParseFailure(path_, open, "unbalanced '{'");
  }

  /// Preprocessor lines and PHP tags form standalone residual text.
  std::size_t directive_end(std::size_t i, std::size_t end) const {
    if ((lang_ == LanguageId::c || lang_ == LanguageId::cpp ||
         lang_ == LanguageId::csharp) &&
        code_[i] == '#') {
      std::size_t j = i;
      while (j < end) {
        auto eol = code_.find('\n', j);
        if (eol == npos || eol >= end)
          return end;
        std::size_t k = eol;
        while (k > j && (code_[k - 1] == ' ' || code_[k - 1] == '\r'))
          --k;
        if (k > j && code_[k - 1] == '\\') {
          j = eol + 1;
          continue;
        }
        return eol;
      }
      return end;
    }
    if (lang_ == LanguageId::php) {
      for (std::string_view tag : {"<?php", "<?=", "<?", "?>"})
        if (code_.substr(i, tag.size()) == tag)
          return i + tag.size();
    }
    return npos;
  }

  bool is_access_label(std::size_t stmt, std::size_t colon) const {
    if (colon + 1 < code_.size() && code_[colon + 1] == ':')
      return false;
    if (colon > 0 && code_[colon - 1] == ':')
      return false;
    auto word = trim(code_.substr(stmt, colon - stmt));
    return word == "public" || word == "private" || word == "protected";
  }

  bool ends_statement(std::size_t stmt, std::size_t nl, std::size_t end) const {
    if (stmt == npos)
      return false;
    std::size_t line_begin = code_.rfind('\n', nl == 0 ? 0 : nl - 1);
    line_begin = (line_begin == npos || line_begin < stmt) ? stmt : line_begin + 1;
    auto cur = trim(code_.substr(line_begin, nl - line_begin));
    if (cur.empty())
      return false;
    static constexpr std::string_view kContinuers = ",([=+-*/&|.:<>?{!\\";
    if (kContinuers.find(cur.back()) != npos)
      return false;
    if (cur.front() == '@') {
      static const std::regex kAnnotation(R"(^@[\w.]+(\s*\(.*\))?$)");
      if (std::regex_match(cur.begin(), cur.end(), kAnnotation))
        return false;
    }
    std::size_t j = nl + 1;
    while (j < end && is_space(code_[j]))
      ++j;
    if (j >= end)
      return true;
    static constexpr std::string_view kLeaders = "{.)],?:=&|";
    return kLeaders.find(code_[j]) == npos;
  }

  std::string_view text_;
  std::string_view code_;
  LanguageId lang_;
  const std::string &path_;
};

/// First non-blank byte of the run of comment lines directly above `pos`.
inline std::size_t attach_leading_comments(std::string_view text,
                                           std::string_view code,
                                           std::size_t pos, std::size_t floor) {
  std::size_t start = pos;
  std::size_t line_begin = text.rfind('\n', pos == 0 ? 0 : pos - 1);
  if (pos == 0 || line_begin == std::string_view::npos)
    return start;
  while (line_begin > floor) {
    auto prev = text.rfind('\n', line_begin - 1);
    std::size_t b = prev == std::string_view::npos ? 0 : prev + 1;
    if (b < floor)
      break;
    auto raw = text.substr(b, line_begin - b);
    auto masked = code.substr(b, line_begin - b);
    if (is_blank(raw) || !is_blank(masked))
      break;
    start = b;
    while (start < line_begin && is_space(text[start]))
      ++start;
    if (prev == std::string_view::npos)
      break;
    line_begin = prev;
  }
  return start;
}

struct LogicalLine {
  std::size_t start = 0; ///< first non-blank byte
  std::size_t end = 0;   ///< one past the last non-blank byte
  std::size_t indent = 0;
};

/// Python logical lines over masked code (comment-only lines are skipped).
inline std::vector<LogicalLine> python_logical_lines(std::string_view text,
                                                     std::string_view code,
                                                     const std::string &path) {
  std::vector<LogicalLine> lines;
  const std::size_t n = code.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t line_begin = i;
    std::size_t j = i;
    while (j < n && (code[j] == ' ' || code[j] == '\t' || code[j] == '\r' ||
                     code[j] == '\f'))
      ++j;
    if (j >= n)
      break;
    if (code[j] == '\n') {
      i = j + 1;
      continue;
    }
    LogicalLine ll;
    ll.start = j;
    ll.indent = j - line_begin;
    int depth = 0;
    std::size_t k = j;
    for (; k < n; ++k) {
      char c = code[k];
      if (c == '(' || c == '[' || c == '{')
        ++depth;
      else if ((c == ')' || c == ']' || c == '}') && depth > 0)
        --depth;
      else if (c == '\n' && depth == 0) {
        std::size_t b = k;
        while (b > j && is_space(code[b - 1]) && code[b - 1] != '\n')
          --b;
        if (b > j && code[b - 1] == '\\')
          continue;
        break;
      }
    }
    if (depth > 0)
      throw ParseFailure(path, j, "unbalanced bracket");
    std::size_t e = k;
    while (e > j && is_space(text[e - 1]))
      --e;
    ll.end = e;
    lines.push_back(ll);
    i = k < n ? k + 1 : n;
  }
  return lines;
}

inline std::string_view first_word(std::string_view code, std::size_t pos) {
  std::size_t j = pos;
  while (j < code.size() && is_ident_char(code[j]))
    ++j;
  return code.substr(pos, j - pos);
}

inline std::vector<Decl> scan_python(std::string_view text, std::string_view code,
                                     const std::string &path) {
  auto lines = python_logical_lines(text, code, path);

  // Parses the def/class logical line at `idx` (decorators before it already
  // skipped by caller) and returns its kind and name.
  auto head = [&](const LogicalLine &ll) -> std::optional<Decl> {
    std::size_t p = ll.start;
    auto w = first_word(code, p);
    if (w == "async") {
      p += w.size();
      while (p < code.size() && is_space(code[p]))
        ++p;
      w = first_word(code, p);
      if (w != "def")
        return std::nullopt;
    }
    if (w != "def" && w != "class")
      return std::nullopt;
    Decl d;
    d.kind = w == "def" ? ComponentKind::function : ComponentKind::class_;
    d.name = ident_at(code, p + w.size(), "");
    if (d.name.empty())
      d.name = anonymous_name(ll.start);
    return d;
  };

  // Scans lines [from, to) at `indent`, returning declarations with spans.
  std::function<std::vector<Decl>(std::size_t, std::size_t, std::size_t, bool)>
      scan_block = [&](std::size_t from, std::size_t to, std::size_t indent,
                       bool in_class) {
        std::vector<Decl> out;
        std::size_t idx = from;
        while (idx < to) {
          if (lines[idx].indent != indent) {
            ++idx;
            continue;
          }
          std::size_t first = idx;
          while (idx < to && lines[idx].indent == indent &&
                 code[lines[idx].start] == '@')
            ++idx;
          if (idx >= to || lines[idx].indent != indent) {
            continue;
          }
          auto decl = head(lines[idx]);
          if (!decl) {
            ++idx;
            continue;
          }
          std::size_t body = idx + 1;
          std::size_t last = idx;
          while (body < to && lines[body].indent > indent)
            last = body++;
          std::size_t floor = first > 0 ? lines[first - 1].end : 0;
          std::size_t start =
              attach_leading_comments(text, code, lines[first].start, floor);
          decl->span = {start, lines[last].end};
          if (!in_class && decl->kind == ComponentKind::class_ && idx + 1 < body) {
            for (auto &m :
                 scan_block(idx + 1, body, lines[idx + 1].indent, true))
              if (m.kind == ComponentKind::function) {
                m.kind = ComponentKind::method;
                decl->methods.push_back(std::move(m));
              }
          }
          if (!in_class || decl->kind == ComponentKind::function)
            out.push_back(std::move(*decl));
          idx = body;
        }
        return out;
      };
  if (lines.empty())
    return {};
  return scan_block(0, lines.size(), lines.front().indent, false);
}

/// Ruby: keyword blocks closed by `end`; modules are transparent.
inline std::vector<Decl> scan_ruby(std::string_view text, std::string_view code,
                                   const std::string &path) {
  struct Frame {
    std::string_view kw;
    std::size_t start;
    std::string name;
    bool top;                 // declaration at effective top level
    std::vector<Decl> methods;
  };
  std::vector<Frame> stack;
  std::vector<Decl> out;
  const std::size_t n = code.size();

  auto effective_top = [&] {
    return std::all_of(stack.begin(), stack.end(),
                       [](const Frame &f) { return f.kw == "module"; });
  };
  auto stmt_start = [&](std::size_t p) {
    std::size_t j = p;
    while (j > 0 && (code[j - 1] == ' ' || code[j - 1] == '\t'))
      --j;
    if (j == 0 || code[j - 1] == '\n')
      return true;
    char c = code[j - 1];
    return c == ';' || c == '=' || c == '(' || c == ',' || c == '[' ||
           c == '{' || c == '|' || c == '&' || c == '!';
  };
  std::size_t loop_line_end = 0; // `do` after while/until/for on this line

  std::size_t i = 0;
  while (i < n) {
    if (!is_ident_char(code[i]) ||
        (i > 0 && (is_ident_char(code[i - 1]) || code[i - 1] == '.' ||
                   code[i - 1] == ':' || code[i - 1] == '@' ||
                   code[i - 1] == '$'))) {
      ++i;
      continue;
    }
    auto w = first_word(code, i);
    std::size_t after = i + w.size();
    bool label = after < n && code[after] == ':' &&
                 (after + 1 >= n || code[after + 1] != ':');
    if (label || (after < n && (code[after] == '?' || code[after] == '!'))) {
      i = after + 1;
      continue;
    }
    if (w == "def") {
      std::size_t p = after;
      while (p < n && (code[p] == ' ' || code[p] == '\t'))
        ++p;
      std::size_t q = p;
      while (q < n && !is_space(code[q]) && code[q] != '(' && code[q] != ';')
        ++q;
      std::string name(code.substr(p, q - p));
      // Endless method `def x = expr` / `def x(a) = expr` opens no block.
      std::size_t r = q;
      if (r < n && code[r] == '(')
        r = skip_group(code, r, '(', ')');
      while (r < n && (code[r] == ' ' || code[r] == '\t'))
        ++r;
      if (r < n && code[r] == '=' && (r + 1 >= n || code[r + 1] != '=')) {
        i = r + 1;
        continue;
      }
      stack.push_back({w, i, name.empty() ? anonymous_name(i) : name, false, {}});
    } else if (w == "class" || w == "module") {
      std::string name = ident_at(code, after, ":");
      if (name.empty())
        name = w == "class" ? "singleton@" + std::to_string(i) : anonymous_name(i);
      stack.push_back({w, i, name, false, {}});
    } else if (w == "begin" || w == "case") {
      stack.push_back({w, i, {}, false, {}});
    } else if ((w == "if" || w == "unless" || w == "while" || w == "until" ||
                w == "for") &&
               stmt_start(i)) {
      if (w == "while" || w == "until" || w == "for") {
        auto eol = code.find('\n', i);
        loop_line_end = eol == std::string_view::npos ? n : eol;
      }
      stack.push_back({w, i, {}, false, {}});
    } else if (w == "do") {
      if (i < loop_line_end) {
        loop_line_end = 0;
      } else {
        stack.push_back({w, i, {}, false, {}});
      }
    } else if (w == "end") {
      if (stack.empty())
        throw ParseFailure(path, i, "unbalanced 'end'");
      Frame f = std::move(stack.back());
      stack.pop_back();
      if (f.kw == "def" || f.kw == "class") {
        std::size_t start = attach_leading_comments(text, code, f.start, 0);
        Decl d;
        d.kind = f.kw == "def" ? ComponentKind::function : ComponentKind::class_;
        d.name = f.name;
        d.span = {start, after};
        d.methods = std::move(f.methods);
        if (effective_top()) {
          out.push_back(std::move(d));
        } else if (d.kind == ComponentKind::function && stack.back().kw == "class") {
          // Method of an effective-top-level class?
          Frame parent = std::move(stack.back());
          stack.pop_back();
          bool parent_top = effective_top();
          stack.push_back(std::move(parent));
          if (parent_top) {
            d.kind = ComponentKind::method;
            stack.back().methods.push_back(std::move(d));
          }
        }
      }
    }
    i = after;
  }
  if (!stack.empty())
    throw ParseFailure(path, stack.back().start,
                       "unterminated '" + std::string(stack.back().kw) + "' block");
  return out;
}

} // namespace detail

/// Partitions the file into module fragments of at most `max_bytes`, split at
/// blank lines when possible, then at line ends, then anywhere.
inline std::vector<CodeComponent> fallback_fragment(const SourceFile &file,
                                                    std::size_t max_bytes) {
  if (max_bytes == 0)
    throw Error("fallback_fragment: max_bytes must be positive");
  std::vector<CodeComponent> out;
  std::size_t pos = 0;
  while (pos < file.content.size()) {
    std::size_t cut = detail::fragment_cut(file.content, pos, max_bytes);
    out.push_back(make_component(file, ComponentKind::module_fragment,
                                 detail::fragment_name(pos), {pos, cut}));
    pos = cut;
  }
  return out;
}

/// Splits a file into functions, classes, their methods, and module
/// fragments for the residual top-level text. Output is sorted by span start
/// (a class precedes its methods). Unknown languages get fallback fragments.
/// Throws ParseFailure when the text cannot be segmented.
inline std::vector<CodeComponent> decompose(const SourceFile &file) {
  if (file.content.empty())
    return {};
  if (file.language == LanguageId::unknown)
    return fallback_fragment(file, kDefaultFragmentBytes);

  const std::string code = lexer::mask(file.content, file.language, file.path);
  std::vector<detail::Decl> decls;
  if (file.language == LanguageId::python) {
    decls = detail::scan_python(file.content, code, file.path);
  } else if (file.language == LanguageId::ruby) {
    decls = detail::scan_ruby(file.content, code, file.path);
  } else {
    detail::BraceScanner scanner(file.content, code, file.language, file.path);
    decls = scanner.scan(0, code.size(), false);
  }
  std::sort(decls.begin(), decls.end(),
            [](const auto &a, const auto &b) { return a.span.start < b.span.start; });

  std::vector<CodeComponent> out;
  auto add_gap = [&](std::size_t from, std::size_t to) {
    while (from < to && is_space(file.content[from]))
      ++from;
    while (to > from && is_space(file.content[to - 1]))
      --to;
    if (from < to)
      out.push_back(make_component(file, ComponentKind::module_fragment,
                                   detail::fragment_name(from), {from, to}));
  };
  std::size_t cursor = 0;
  for (auto &d : decls) {
    add_gap(cursor, d.span.start);
    auto parent = make_component(file, d.kind, d.name, d.span);
    std::string parent_id = parent.id;
    out.push_back(std::move(parent));
    for (auto &m : d.methods)
      out.push_back(make_component(file, ComponentKind::method, m.name, m.span,
                                   parent_id));
    cursor = d.span.end;
  }
  add_gap(cursor, file.content.size());
  std::stable_sort(out.begin(), out.end(), [](const auto &a, const auto &b) {
    return a.span.start < b.span.start;
  });
  return out;
}

struct Decomposition {
  std::vector<CodeComponent> components;
  std::vector<std::string> warnings;
  bool used_fallback = false;
};

/// decompose(), degrading to fallback fragments on ParseFailure.
inline Decomposition decompose_or_fallback(const SourceFile &file,
                                           std::size_t fragment_bytes = kDefaultFragmentBytes) {
  Decomposition d;
  try {
    d.components = decompose(file);
    d.used_fallback = file.language == LanguageId::unknown && !file.content.empty();
  } catch (const ParseFailure &e) {
    d.warnings.push_back(std::string(e.what()) + "; using fallback fragments");
    d.components = fallback_fragment(file, fragment_bytes);
    d.used_fallback = true;
  }
  return d;
}

/// Parameter names declared by a function or method component, in order.
/// `self`, `this` and `cls` are omitted.
inline std::vector<std::string> parameter_names(const CodeComponent &c) {
  std::vector<std::string> names;
  if (c.kind != ComponentKind::function && c.kind != ComponentKind::method)
    return names;
  std::string code;
  try {
    code = lexer::mask(c.source, c.language);
  } catch (const ParseFailure &) {
    return names;
  }
  std::string_view leaf = c.name;
  if (auto p = leaf.find_last_of(".:"); p != std::string_view::npos)
    leaf = leaf.substr(p + 1);
  auto at = leaf.empty() ? std::string::npos : detail::find_word(code, leaf);
  std::size_t open = std::string::npos;
  if (at != std::string::npos) {
    std::size_t j = at + leaf.size();
    while (j < code.size() && is_space(code[j]))
      ++j;
    if (j < code.size() && code[j] == '<')
      j = detail::skip_group(code, j, '<', '>');
    while (j < code.size() && is_space(code[j]))
      ++j;
    if (j < code.size() && code[j] == '(')
      open = j;
    else if (c.language == LanguageId::javascript || c.language == LanguageId::typescript) {
      open = code.find('(', j);
    }
  } else {
    open = code.find('(');
  }
  std::string_view params;
  if (open != std::string::npos) {
    auto close = detail::skip_group(code, open, '(', ')');
    params = std::string_view(code).substr(open + 1, close - open - 2);
  } else if (c.language == LanguageId::ruby && at != std::string::npos) {
    auto eol = code.find_first_of("\n;", at);
    params = std::string_view(code).substr(at + leaf.size(),
                                           (eol == std::string::npos ? code.size() : eol) - at - leaf.size());
  } else {
    return names;
  }

  std::vector<std::string_view> pieces;
  int depth = 0;
  std::size_t last = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    char ch = params[k];
    if (ch == '(' || ch == '[' || ch == '{' || ch == '<')
      ++depth;
    else if ((ch == ')' || ch == ']' || ch == '}' || ch == '>') && depth > 0)
      --depth;
    else if (ch == ',' && depth == 0) {
      pieces.push_back(params.substr(last, k - last));
      last = k + 1;
    }
  }
  pieces.push_back(params.substr(last));

  for (auto piece : pieces) {
    auto eq = piece.find('=');
    if (eq != std::string_view::npos)
      piece = piece.substr(0, eq);
    if (auto colon = piece.find(':'); colon != std::string_view::npos &&
                                      c.language != LanguageId::cpp)
      piece = piece.substr(0, colon);
    std::vector<std::string> idents;
    std::size_t k = 0;
    while (k < piece.size()) {
      if (is_ident_char(piece[k]) && !std::isdigit(static_cast<unsigned char>(piece[k]))) {
        std::size_t s = k;
        while (k < piece.size() && is_ident_char(piece[k]))
          ++k;
        idents.emplace_back(piece.substr(s, k - s));
      } else if (is_ident_char(piece[k])) {
        while (k < piece.size() && is_ident_char(piece[k]))
          ++k;
      } else {
        ++k;
      }
    }
    if (idents.empty())
      continue;
    // Go, Python and Ruby put the name first; elsewhere it follows the type.
    std::string name;
    if (c.language == LanguageId::go || c.language == LanguageId::python ||
        c.language == LanguageId::ruby)
      name = idents.front();
    else
      name = idents.back();
    static constexpr std::array<std::string_view, 7> kSkip = {
        "self", "this", "cls", "mut", "const", "final", "void"};
    if (std::find(kSkip.begin(), kSkip.end(), name) != kSkip.end())
      continue;
    names.push_back(name);
  }
  return names;
}

} // namespace malscan
