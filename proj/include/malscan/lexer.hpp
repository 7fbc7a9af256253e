#pragma once

#include "malscan/common.hpp"
#include "malscan/language.hpp"

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

namespace malscan {

class ParseFailure : public Error {
public:
  ParseFailure(std::string path, std::size_t position, const std::string &reason)
      : Error("parse failure in " + path + " at byte " +
              std::to_string(position) + ": " + reason),
        path_(std::move(path)), position_(position) {}

  [[nodiscard]] const std::string &path() const { return path_; }
  [[nodiscard]] std::size_t position() const { return position_; }

private:
  std::string path_;
  std::size_t position_;
};

namespace lexer {

enum class SingleQuote { string, char_literal, none };

struct LexSpec {
  std::vector<std::string_view> line_comments;
  std::string_view block_open;
  std::string_view block_close;
  bool nested_blocks = false;
  SingleQuote single_quote = SingleQuote::string;
  bool backtick_strings = false;  // JS templates, Go raw strings, Ruby shell
  bool triple_quotes = false;     // """ (and ''' for Python)
  bool cpp_raw_strings = false;   // R"delim( ... )delim"
  bool rust_raw_strings = false;  // r"..." / r#"..."#
  bool csharp_verbatim = false;   // @"..." with "" escapes
  bool ruby_block_comments = false; // =begin / =end at line start
  std::string_view heredoc_opener;   // "<<" (Ruby) or "<<<" (PHP)
};

inline LexSpec spec_for(LanguageId lang) {
  LexSpec s;
  switch (lang) {
  case LanguageId::python:
    s.line_comments = {"#"};
    s.triple_quotes = true;
    break;
  case LanguageId::ruby:
    s.line_comments = {"#"};
    s.backtick_strings = true;
    s.ruby_block_comments = true;
    s.heredoc_opener = "<<";
    break;
  case LanguageId::php:
    s.line_comments = {"//", "#"};
    s.block_open = "/*";
    s.block_close = "*/";
    s.heredoc_opener = "<<<";
    break;
  case LanguageId::javascript:
  case LanguageId::typescript:
    s.line_comments = {"//"};
    s.block_open = "/*";
    s.block_close = "*/";
    s.backtick_strings = true;
    break;
  case LanguageId::go:
    s.line_comments = {"//"};
    s.block_open = "/*";
    s.block_close = "*/";
    s.single_quote = SingleQuote::char_literal;
    s.backtick_strings = true;
    break;
  case LanguageId::rust:
    s.line_comments = {"//"};
    s.block_open = "/*";
    s.block_close = "*/";
    s.nested_blocks = true;
    s.single_quote = SingleQuote::char_literal;
    s.rust_raw_strings = true;
    break;
  case LanguageId::scala:
  case LanguageId::kotlin:
    s.line_comments = {"//"};
    s.block_open = "/*";
    s.block_close = "*/";
    s.nested_blocks = true;
    s.single_quote = SingleQuote::char_literal;
    s.triple_quotes = true;
    break;
  case LanguageId::swift:
    s.line_comments = {"//"};
    s.block_open = "/*";
    s.block_close = "*/";
    s.nested_blocks = true;
    s.single_quote = SingleQuote::none;
    s.triple_quotes = true;
    break;
  case LanguageId::java:
    s.line_comments = {"//"};
    s.block_open = "/*";
    s.block_close = "*/";
    s.single_quote = SingleQuote::char_literal;
    s.triple_quotes = true;
    break;
  case LanguageId::csharp:
    s.line_comments = {"//"};
    s.block_open = "/*";
    s.block_close = "*/";
    s.single_quote = SingleQuote::char_literal;
    s.csharp_verbatim = true;
    s.triple_quotes = true;
    break;
  case LanguageId::c:
  case LanguageId::cpp:
    s.line_comments = {"//"};
    s.block_open = "/*";
    s.block_close = "*/";
    s.single_quote = SingleQuote::char_literal;
    s.cpp_raw_strings = lang == LanguageId::cpp;
    break;
  case LanguageId::unknown:
    break;
  }
  return s;
}

/// Copy of `text` in which comment and string-literal bytes are blanked out.
/// Offsets are preserved. String delimiters are kept; everything between them,
/// newlines included, becomes a space, so a literal never splits a line.
/// Throws ParseFailure for unterminated block comments or multi-line strings.
inline std::string mask(std::string_view text, LanguageId lang,
                        const std::string &path = {}) {
  const LexSpec spec = spec_for(lang);
  std::string out(text);
  const std::size_t n = text.size();
  auto starts = [&](std::size_t i, std::string_view tok) {
    return !tok.empty() && text.substr(i, tok.size()) == tok;
  };
  auto blank = [&](std::size_t from, std::size_t to) {
    for (std::size_t k = from; k < to && k < n; ++k)
      out[k] = ' ';
  };
  auto at_line_start = [&](std::size_t i) { return i == 0 || text[i - 1] == '\n'; };

  // Scans a quoted literal opened at `i` with delimiter `delim`; returns the
  // index one past the closing delimiter.
  auto scan_quoted = [&](std::size_t i, std::string_view delim, bool escapes,
                         bool multiline) -> std::size_t {
    std::size_t j = i + delim.size();
    while (j < n) {
      if (escapes && text[j] == '\\') {
        j += 2;
        continue;
      }
      if (starts(j, delim))
        return j + delim.size();
      if (!multiline && text[j] == '\n')
        return j; // unterminated single-line literal ends at the newline
      ++j;
    }
    if (multiline)
      throw ParseFailure(path, i, "unterminated string literal");
    return n;
  };

  // Heredoc terminators waiting for the end of the current line.
  std::vector<std::string> heredocs;
  auto heredoc_at = [&](std::size_t i) -> std::size_t {
    // Returns the opener length (0 if none) and queues the terminator.
    if (spec.heredoc_opener.empty() || !starts(i, spec.heredoc_opener))
      return 0;
    if (i > 0 && text[i - 1] == '<')
      return 0;
    std::size_t j = i + spec.heredoc_opener.size();
    if (spec.heredoc_opener == "<<" && j < n && (text[j] == '~' || text[j] == '-'))
      ++j;
    char quote = 0;
    if (j < n && (text[j] == '\'' || text[j] == '"')) {
      quote = text[j];
      ++j;
    }
    std::size_t id_start = j;
    while (j < n && is_ident_char(text[j]))
      ++j;
    if (j == id_start)
      return 0;
    std::string id(text.substr(id_start, j - id_start));
    bool upper = std::all_of(id.begin(), id.end(), [](char ch) {
      return (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '_';
    });
    if (!upper && quote == 0 && spec.heredoc_opener == "<<")
      return 0;
    if (quote != 0) {
      if (j >= n || text[j] != quote)
        return 0;
      ++j;
    }
    heredocs.push_back(std::move(id));
    return j - i;
  };

  std::size_t i = 0;
  while (i < n) {
    char c = text[i];

    if (c == '\n' && !heredocs.empty()) {
      std::size_t j = i + 1;
      for (const auto &id : heredocs) {
        bool found = false;
        while (j < n) {
          auto eol = text.find('\n', j);
          eol = eol == std::string_view::npos ? n : eol;
          auto line = trim(text.substr(j, eol - j));
          bool terminator = line.substr(0, id.size()) == id &&
                            (line.size() == id.size() || !is_ident_char(line[id.size()]));
          if (terminator) {
            std::size_t id_pos = j + (text.substr(j, eol - j).find(id));
            blank(i + 1, id_pos);
            j = id_pos + id.size();
            found = true;
            break;
          }
          j = eol + 1;
        }
        if (!found)
          throw ParseFailure(path, i, "unterminated heredoc " + id);
      }
      heredocs.clear();
      i = j;
      continue;
    }

    if (auto len = heredoc_at(i); len > 0) {
      i += len;
      continue;
    }

    if (spec.ruby_block_comments && at_line_start(i) && starts(i, "=begin")) {
      auto end = text.find("\n=end", i);
      if (end == std::string_view::npos)
        throw ParseFailure(path, i, "unterminated =begin comment");
      auto stop = text.find('\n', end + 1);
      stop = stop == std::string_view::npos ? n : stop;
      blank(i, stop);
      i = stop;
      continue;
    }

    bool line_comment = false;
    for (auto tok : spec.line_comments)
      if (starts(i, tok)) {
        // PHP/Rust attributes: `#[` is code, not a comment.
        if (tok == "#" && lang == LanguageId::php && starts(i, "#["))
          continue;
        line_comment = true;
        break;
      }
    if (line_comment) {
      auto stop = text.find('\n', i);
      stop = stop == std::string_view::npos ? n : stop;
      blank(i, stop);
      i = stop;
      continue;
    }

    if (!spec.block_open.empty() && starts(i, spec.block_open)) {
      std::size_t depth = 1;
      std::size_t j = i + spec.block_open.size();
      while (j < n && depth > 0) {
        if (spec.nested_blocks && starts(j, spec.block_open)) {
          ++depth;
          j += spec.block_open.size();
        } else if (starts(j, spec.block_close)) {
          --depth;
          j += spec.block_close.size();
        } else {
          ++j;
        }
      }
      if (depth > 0)
        throw ParseFailure(path, i, "unterminated block comment");
      blank(i, j);
      i = j;
      continue;
    }

    if (spec.cpp_raw_strings && c == 'R' && i + 1 < n && text[i + 1] == '"' &&
        (i == 0 || !is_ident_char(text[i - 1]) || text[i - 1] == 'u' ||
         text[i - 1] == 'U' || text[i - 1] == 'L' || text[i - 1] == '8')) {
      auto paren = text.find('(', i + 2);
      if (paren != std::string_view::npos && paren - (i + 2) <= 16) {
        std::string closing = ")" + std::string(text.substr(i + 2, paren - i - 2)) + "\"";
        auto end = text.find(closing, paren + 1);
        if (end == std::string_view::npos)
          throw ParseFailure(path, i, "unterminated raw string literal");
        blank(i + 2, end + closing.size() - 1);
        i = end + closing.size();
        continue;
      }
    }

    if (spec.rust_raw_strings && (c == 'r' || c == 'b') &&
        (i == 0 || !is_ident_char(text[i - 1]))) {
      std::size_t j = i + (c == 'b' && i + 1 < n && text[i + 1] == 'r' ? 2 : 1);
      if (c == 'r' || j == i + 2) {
        std::size_t hashes = 0;
        while (j < n && text[j] == '#') {
          ++hashes;
          ++j;
        }
        if (j < n && text[j] == '"' && (hashes > 0 || j > i)) {
          std::string closing = "\"" + std::string(hashes, '#');
          auto end = text.find(closing, j + 1);
          if (end == std::string_view::npos)
            throw ParseFailure(path, i, "unterminated raw string literal");
          blank(j + 1, end);
          i = end + closing.size();
          continue;
        }
      }
    }

    if (spec.csharp_verbatim && c == '@' && i + 1 < n && text[i + 1] == '"') {
      std::size_t j = i + 2;
      while (j < n) {
        if (text[j] == '"') {
          if (j + 1 < n && text[j + 1] == '"') {
            j += 2;
            continue;
          }
          break;
        }
        ++j;
      }
      if (j >= n)
        throw ParseFailure(path, i, "unterminated verbatim string");
      blank(i + 2, j);
      i = j + 1;
      continue;
    }

    if (spec.triple_quotes && (starts(i, "\"\"\"") ||
                               (lang == LanguageId::python && starts(i, "'''")))) {
      std::string_view delim = text.substr(i, 3);
      auto end = scan_quoted(i, delim, true, true);
      blank(i + 3, end - 3);
      i = end;
      continue;
    }

    if (c == '"' || (c == '\'' && spec.single_quote == SingleQuote::string)) {
      auto end = scan_quoted(i, text.substr(i, 1), true, false);
      blank(i + 1, end > i + 1 && text[end - 1] == c ? end - 1 : end);
      i = end;
      continue;
    }

    if (c == '\'' && spec.single_quote == SingleQuote::char_literal) {
      // 'x' or '\...' is a literal; anything else (lifetimes, symbols,
      // digit separators) is left as code.
      std::size_t end = std::string_view::npos;
      if (i + 1 < n && text[i + 1] == '\\') {
        auto close = text.find('\'', i + 3);
        if (close != std::string_view::npos && close - i <= 12 &&
            text.substr(i, close - i).find('\n') == std::string_view::npos)
          end = close + 1;
      } else if (i + 1 < n) {
        std::size_t len = 1;
        auto lead = static_cast<unsigned char>(text[i + 1]);
        if (lead >= 0xF0) len = 4;
        else if (lead >= 0xE0) len = 3;
        else if (lead >= 0xC0) len = 2;
        if (i + 1 + len < n && text[i + 1 + len] == '\'' && text[i + 1] != '\n')
          end = i + 2 + len;
      }
      if (end != std::string_view::npos) {
        blank(i + 1, end - 1);
        i = end;
        continue;
      }
      ++i;
      continue;
    }

    if (c == '`' && spec.backtick_strings) {
      auto end = scan_quoted(i, "`", lang != LanguageId::go, true);
      blank(i + 1, end - 1);
      i = end;
      continue;
    }

    ++i;
  }
  return out;
}

} // namespace lexer
} // namespace malscan
