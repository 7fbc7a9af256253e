#pragma once

#include <openssl/sha.h>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace malscan {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Half-open byte range [start, end) into some text.
struct ByteSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  [[nodiscard]] std::size_t size() const { return end - start; }
  [[nodiscard]] bool empty() const { return end <= start; }
  [[nodiscard]] bool contains(const ByteSpan &other) const {
    return start <= other.start && other.end <= end;
  }
  [[nodiscard]] bool overlaps(const ByteSpan &other) const {
    return start < other.end && other.start < end;
  }
  friend bool operator==(const ByteSpan &, const ByteSpan &) = default;
};

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char *>(data.data()), data.size(),
         digest);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

/// Digest string in the "sha256:<hex>" form used throughout reports.
inline std::string digest_of(std::string_view data) {
  return "sha256:" + sha256_hex(data);
}

inline bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_';
}

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front()))
    s.remove_prefix(1);
  while (!s.empty() && is_space(s.back()))
    s.remove_suffix(1);
  return s;
}

inline bool is_blank(std::string_view s) { return trim(s).empty(); }

/// Largest prefix length <= limit that does not cut a UTF-8 sequence.
inline std::size_t utf8_floor(std::string_view s, std::size_t limit) {
  if (limit >= s.size())
    return s.size();
  std::size_t cut = limit;
  while (cut > 0 &&
         (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80 &&
         limit - cut < 3)
    --cut;
  if ((static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80)
    return limit;
  return cut;
}

/// 1-based line number of a byte offset.
inline std::size_t line_of(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n')
      ++line;
  return line;
}

} // namespace malscan
