#pragma once

#include "malscan/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace malscan::cvss {

enum class AttackVector { network, adjacent, local, physical };
enum class AttackComplexity { low, high };
enum class PrivilegesRequired { none, low, high };
enum class UserInteraction { none, required };
enum class Scope { unchanged, changed };
enum class Impact { none, low, high };

struct Vector {
  AttackVector attack_vector = AttackVector::network;
  AttackComplexity attack_complexity = AttackComplexity::low;
  PrivilegesRequired privileges_required = PrivilegesRequired::none;
  UserInteraction user_interaction = UserInteraction::none;
  Scope scope = Scope::unchanged;
  Impact confidentiality = Impact::none;
  Impact integrity = Impact::none;
  Impact availability = Impact::none;

  friend bool operator==(const Vector &, const Vector &) = default;
};

enum class Severity { none, low, medium, high, critical };

inline std::string_view to_string(Severity s) {
  switch (s) {
  case Severity::none: return "None";
  case Severity::low: return "Low";
  case Severity::medium: return "Medium";
  case Severity::high: return "High";
  case Severity::critical: return "Critical";
  }
  return "None";
}

inline std::optional<Severity> parse_severity(std::string_view s) {
  for (auto sev : {Severity::none, Severity::low, Severity::medium,
                   Severity::high, Severity::critical})
    if (to_string(sev) == s)
      return sev;
  return std::nullopt;
}

/// A base score held as an integer count of tenths (0..100).
class Score {
public:
  constexpr Score() = default;
  static constexpr Score from_tenths(int tenths) {
    Score s;
    s.tenths_ = std::clamp(tenths, 0, 100);
    return s;
  }
  /// Nearest tenth; for values that are already multiples of 0.1.
  static Score from_decimal(double value) {
    return from_tenths(static_cast<int>(std::lround(value * 10.0)));
  }

  [[nodiscard]] constexpr int tenths() const { return tenths_; }
  [[nodiscard]] double value() const { return tenths_ / 10.0; }

  [[nodiscard]] constexpr Severity severity() const {
    if (tenths_ == 0) return Severity::none;
    if (tenths_ < 40) return Severity::low;
    if (tenths_ < 70) return Severity::medium;
    if (tenths_ < 90) return Severity::high;
    return Severity::critical;
  }

  /// "9.8"
  [[nodiscard]] std::string str() const {
    return std::to_string(tenths_ / 10) + "." + std::to_string(tenths_ % 10);
  }

  friend constexpr auto operator<=>(const Score &, const Score &) = default;

private:
  int tenths_ = 0;
};

class MalformedVector : public Error {
public:
  MalformedVector(std::size_t position, const std::string &reason)
      : Error("malformed CVSS vector at position " + std::to_string(position) +
              ": " + reason),
        position_(position) {}
  [[nodiscard]] std::size_t position() const { return position_; }

private:
  std::size_t position_;
};

/// Smallest number with one decimal place that is >= value, computed on
/// integers so that e.g. 4.000000000000001 rounds to 4.0, not 4.1.
inline int roundup_tenths(double value) {
  const auto int_input = static_cast<std::int64_t>(std::llround(value * 100000.0));
  if (int_input % 10000 == 0)
    return static_cast<int>(int_input / 10000);
  return static_cast<int>(int_input / 10000 + 1);
}

namespace weights {
inline double av(AttackVector v) {
  switch (v) {
  case AttackVector::network: return 0.85;
  case AttackVector::adjacent: return 0.62;
  case AttackVector::local: return 0.55;
  case AttackVector::physical: return 0.2;
  }
  return 0;
}
inline double ac(AttackComplexity v) {
  return v == AttackComplexity::low ? 0.77 : 0.44;
}
inline double pr(PrivilegesRequired v, Scope s) {
  switch (v) {
  case PrivilegesRequired::none: return 0.85;
  case PrivilegesRequired::low: return s == Scope::changed ? 0.68 : 0.62;
  case PrivilegesRequired::high: return s == Scope::changed ? 0.5 : 0.27;
  }
  return 0;
}
inline double ui(UserInteraction v) {
  return v == UserInteraction::none ? 0.85 : 0.62;
}
inline double cia(Impact v) {
  switch (v) {
  case Impact::none: return 0.0;
  case Impact::low: return 0.22;
  case Impact::high: return 0.56;
  }
  return 0;
}
} // namespace weights

inline Score base_score(const Vector &v) {
  const double iss = 1.0 - (1.0 - weights::cia(v.confidentiality)) *
                               (1.0 - weights::cia(v.integrity)) *
                               (1.0 - weights::cia(v.availability));
  const bool changed = v.scope == Scope::changed;
  const double impact =
      changed ? 7.52 * (iss - 0.029) - 3.25 * std::pow(iss - 0.02, 15)
              : 6.42 * iss;
  const double exploitability =
      8.22 * weights::av(v.attack_vector) * weights::ac(v.attack_complexity) *
      weights::pr(v.privileges_required, v.scope) *
      weights::ui(v.user_interaction);
  if (impact <= 0)
    return Score::from_tenths(0);
  const double raw = changed ? std::min(1.08 * (impact + exploitability), 10.0)
                             : std::min(impact + exploitability, 10.0);
  return Score::from_tenths(roundup_tenths(raw));
}

namespace detail {

struct MetricDef {
  std::string_view key;
  std::string_view values; // allowed single-letter values, in enum order
};

inline constexpr std::array<MetricDef, 8> kMetrics = {{
    {"AV", "NALP"},
    {"AC", "LH"},
    {"PR", "NLH"},
    {"UI", "NR"},
    {"S", "UC"},
    {"C", "NLH"},
    {"I", "NLH"},
    {"A", "NLH"},
}};

inline std::array<int, 8> ordinals(const Vector &v) {
  return {static_cast<int>(v.attack_vector),
          static_cast<int>(v.attack_complexity),
          static_cast<int>(v.privileges_required),
          static_cast<int>(v.user_interaction),
          static_cast<int>(v.scope),
          static_cast<int>(v.confidentiality),
          static_cast<int>(v.integrity),
          static_cast<int>(v.availability)};
}

inline Vector from_ordinals(const std::array<int, 8> &o) {
  Vector v;
  v.attack_vector = static_cast<AttackVector>(o[0]);
  v.attack_complexity = static_cast<AttackComplexity>(o[1]);
  v.privileges_required = static_cast<PrivilegesRequired>(o[2]);
  v.user_interaction = static_cast<UserInteraction>(o[3]);
  v.scope = static_cast<Scope>(o[4]);
  v.confidentiality = static_cast<Impact>(o[5]);
  v.integrity = static_cast<Impact>(o[6]);
  v.availability = static_cast<Impact>(o[7]);
  return v;
}

} // namespace detail

/// Canonical "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H".
inline std::string render(const Vector &v) {
  std::string out = "CVSS:3.1";
  auto ord = detail::ordinals(v);
  for (std::size_t i = 0; i < detail::kMetrics.size(); ++i) {
    out += '/';
    out += detail::kMetrics[i].key;
    out += ':';
    out += detail::kMetrics[i].values[static_cast<std::size_t>(ord[i])];
  }
  return out;
}

/// Accepts the eight base metrics in any order after the "CVSS:3.1/" prefix.
inline Vector parse_vector(std::string_view s) {
  static constexpr std::string_view kPrefix = "CVSS:3.1/";
  if (s.substr(0, kPrefix.size()) != kPrefix)
    throw MalformedVector(0, "expected prefix CVSS:3.1/");
  std::array<int, 8> ord{};
  std::array<bool, 8> seen{};
  std::size_t pos = kPrefix.size();
  if (pos >= s.size())
    throw MalformedVector(pos, "no metrics");
  while (pos <= s.size()) {
    auto slash = s.find('/', pos);
    auto token = s.substr(pos, slash == std::string_view::npos ? s.npos : slash - pos);
    auto colon = token.find(':');
    if (colon == std::string_view::npos || colon + 2 != token.size())
      throw MalformedVector(pos, "expected METRIC:VALUE, got '" + std::string(token) + "'");
    auto key = token.substr(0, colon);
    char value = token[colon + 1];
    auto it = std::find_if(detail::kMetrics.begin(), detail::kMetrics.end(),
                           [&](const auto &m) { return m.key == key; });
    if (it == detail::kMetrics.end())
      throw MalformedVector(pos, "unknown metric '" + std::string(key) + "'");
    auto idx = static_cast<std::size_t>(it - detail::kMetrics.begin());
    if (seen[idx])
      throw MalformedVector(pos, "duplicate metric '" + std::string(key) + "'");
    auto vpos = it->values.find(value);
    if (vpos == std::string_view::npos)
      throw MalformedVector(pos + colon + 1, "invalid value '" + std::string(1, value) +
                                                 "' for metric " + std::string(key));
    seen[idx] = true;
    ord[idx] = static_cast<int>(vpos);
    if (slash == std::string_view::npos)
      break;
    pos = slash + 1;
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i])
      throw MalformedVector(s.size(), "missing metric " + std::string(detail::kMetrics[i].key));
  return detail::from_ordinals(ord);
}

/// Every one of the 2,592 base-metric combinations, in lexicographic order of
/// the metric ordinals.
inline std::vector<Vector> all_vectors() {
  std::vector<Vector> out;
  out.reserve(2592);
  std::array<int, 8> ord{};
  while (true) {
    out.push_back(detail::from_ordinals(ord));
    int i = 7;
    for (; i >= 0; --i) {
      auto limit = static_cast<int>(detail::kMetrics[static_cast<std::size_t>(i)].values.size());
      if (++ord[static_cast<std::size_t>(i)] < limit)
        break;
      ord[static_cast<std::size_t>(i)] = 0;
    }
    if (i < 0)
      break;
  }
  return out;
}

} // namespace malscan::cvss
