#pragma once

#include "malscan/componentizer.hpp"
#include "malscan/cvss.hpp"
#include "malscan/rules.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <string>
#include <vector>

namespace malscan {

inline constexpr double kDefaultFlagThreshold = 4.0;
inline constexpr std::size_t kExcerptLimit = 200;
/// Lines longer than this are not matched (minified or generated code).
inline constexpr std::size_t kMaxMatchLine = 4096;

struct Indicator {
  std::string rule_id;
  VulnCategory category = VulnCategory::sql_injection;
  ByteSpan span;       ///< relative to the component source
  std::string excerpt; ///< matched text, at most kExcerptLimit bytes
  cvss::Vector vector;
  std::size_t line = 0; ///< 1-based line in the file

  friend bool operator==(const Indicator &, const Indicator &) = default;
};

struct PrescoreResult {
  std::string component_id;
  std::vector<Indicator> indicators;
  cvss::Score score;
  bool flagged = false;
  std::vector<std::string> warnings;
};

/// Threshold as tenths, rounding up so that score >= threshold compares
/// exactly on the 0.1 grid.
inline int threshold_tenths(double threshold) {
  return static_cast<int>(std::ceil(threshold * 10.0 - 1e-9));
}

inline bool meets_threshold(cvss::Score score, double threshold) {
  return score.tenths() >= threshold_tenths(threshold);
}

namespace detail {

/// Word-boundary semantics: a match that begins (ends) with a word character
/// must not be preceded (followed) by one.
inline bool on_word_boundaries(std::string_view line, std::size_t begin,
                               std::size_t end) {
  if (end <= begin)
    return false;
  if (is_ident_char(line[begin]) && begin > 0 && is_ident_char(line[begin - 1]))
    return false;
  if (is_ident_char(line[end - 1]) && end < line.size() && is_ident_char(line[end]))
    return false;
  return true;
}

/// Resumed searches must still see the preceding character for `\b` and `^`.
inline std::regex_constants::match_flag_type search_flags(const char *begin,
                                                          std::string_view line) {
  return begin == line.data() ? std::regex_constants::match_default
                              : std::regex_constants::match_prev_avail;
}

struct LineRef {
  std::size_t offset;
  std::string_view text;
};

inline std::vector<LineRef> split_lines(std::string_view s) {
  std::vector<LineRef> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto nl = s.find('\n', pos);
    auto stop = nl == std::string_view::npos ? s.size() : nl;
    out.push_back({pos, s.substr(pos, stop - pos)});
    if (nl == std::string_view::npos)
      break;
    pos = nl + 1;
  }
  return out;
}

} // namespace detail

/// Applies every rule for the component's language, line by line.
/// Matches overlapping `exclude` (absolute file spans, e.g. a class's own
/// methods) are ignored. Indicators are ordered by span start, then rule id.
inline PrescoreResult prescore(const CodeComponent &component,
                               const RuleSet &rules,
                               double flag_threshold = kDefaultFlagThreshold,
                               const std::vector<ByteSpan> &exclude = {}) {
  PrescoreResult result;
  result.component_id = component.id;
  const auto lines = detail::split_lines(component.source);
  const std::size_t base_line = component.line_start;

  auto excluded = [&](ByteSpan rel) {
    ByteSpan abs{component.span.start + rel.start, component.span.start + rel.end};
    return std::any_of(exclude.begin(), exclude.end(),
                       [&](const ByteSpan &e) { return e.overlaps(abs); });
  };

  bool long_line_warned = false;
  for (const auto &rule : rules.rules) {
    if (!rule.applies_to(component.language))
      continue;
    std::vector<Indicator> found_here;
    try {
      if (!rule.context_pattern.empty()) {
        bool found = false;
        for (std::size_t li = 0; li < lines.size() && !found; ++li) {
          const auto &l = lines[li];
          if (l.text.size() > kMaxMatchLine)
            continue;
          std::cmatch m;
          auto begin = l.text.data();
          auto end = begin + l.text.size();
          while (std::regex_search(begin, end, m, rule.context_pattern.regex(),
                                   detail::search_flags(begin, l.text))) {
            auto off = static_cast<std::size_t>(m[0].first - l.text.data());
            auto len = static_cast<std::size_t>(m.length(0));
            if (!excluded({l.offset + off, l.offset + off + std::max<std::size_t>(len, 1)}) &&
                detail::on_word_boundaries(l.text, off, off + len)) {
              found = true;
              break;
            }
            begin = m[0].second == m[0].first ? m[0].second + 1 : m[0].second;
            if (begin > end)
              break;
          }
        }
        if (!found)
          continue;
      }
      for (std::size_t li = 0; li < lines.size(); ++li) {
        const auto &l = lines[li];
        if (l.text.size() > kMaxMatchLine) {
          if (!long_line_warned)
            result.warnings.push_back("line " + std::to_string(base_line + li) +
                                      " longer than " + std::to_string(kMaxMatchLine) +
                                      " bytes was not matched");
          long_line_warned = true;
          continue;
        }
        auto begin = l.text.data();
        auto end = begin + l.text.size();
        std::cmatch m;
        while (begin <= end && std::regex_search(begin, end, m, rule.pattern.regex(),
                                                 detail::search_flags(begin, l.text))) {
          auto off = static_cast<std::size_t>(m[0].first - l.text.data());
          auto len = static_cast<std::size_t>(m.length(0));
          ByteSpan rel{l.offset + off, l.offset + off + len};
          if (len > 0 && detail::on_word_boundaries(l.text, off, off + len) &&
              !excluded(rel)) {
            Indicator ind;
            ind.rule_id = rule.rule_id;
            ind.category = rule.category;
            ind.span = rel;
            std::string_view matched = l.text.substr(off, len);
            ind.excerpt = std::string(matched.substr(0, utf8_floor(matched, kExcerptLimit)));
            ind.vector = rule.vector;
            ind.line = base_line + li;
            found_here.push_back(std::move(ind));
          }
          if (m[0].second == m[0].first) {
            if (m[0].second == end)
              break;
            begin = m[0].second + 1;
          } else {
            begin = m[0].second;
          }
        }
      }
      for (auto &ind : found_here)
        result.indicators.push_back(std::move(ind));
    } catch (const std::regex_error &e) {
      result.warnings.push_back("rule " + rule.rule_id + " skipped: " + e.what());
    }
  }
  std::sort(result.indicators.begin(), result.indicators.end(),
            [](const Indicator &a, const Indicator &b) {
              if (a.span.start != b.span.start)
                return a.span.start < b.span.start;
              return a.rule_id < b.rule_id;
            });
  for (const auto &ind : result.indicators)
    result.score = std::max(result.score, cvss::base_score(ind.vector));
  result.flagged = meets_threshold(result.score, flag_threshold);
  return result;
}

} // namespace malscan
