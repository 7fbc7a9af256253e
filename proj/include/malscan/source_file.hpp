#pragma once

#include "malscan/common.hpp"
#include "malscan/language.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace malscan {

struct Utf8DecodeResult {
  std::string text;
  std::size_t replaced = 0;
  std::size_t first_bad_offset = 0;
};

/// Decodes `bytes` as UTF-8, substituting U+FFFD for every byte that does not
/// start a well-formed sequence.
inline Utf8DecodeResult decode_utf8(std::string_view bytes) {
  static constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
  Utf8DecodeResult out;
  out.text.reserve(bytes.size());
  auto byte = [&](std::size_t i) { return static_cast<unsigned char>(bytes[i]); };
  auto cont = [&](std::size_t i) {
    return i < bytes.size() && (byte(i) & 0xC0) == 0x80;
  };
  std::size_t i = 0;
  while (i < bytes.size()) {
    unsigned char b = byte(i);
    std::size_t len = 0;
    if (b < 0x80) {
      len = 1;
    } else if (b >= 0xC2 && b <= 0xDF) {
      len = cont(i + 1) ? 2 : 0;
    } else if (b >= 0xE0 && b <= 0xEF) {
      if (cont(i + 1) && cont(i + 2)) {
        unsigned char b1 = byte(i + 1);
        bool overlong = b == 0xE0 && b1 < 0xA0;
        bool surrogate = b == 0xED && b1 >= 0xA0;
        len = (overlong || surrogate) ? 0 : 3;
      }
    } else if (b >= 0xF0 && b <= 0xF4) {
      if (cont(i + 1) && cont(i + 2) && cont(i + 3)) {
        unsigned char b1 = byte(i + 1);
        bool overlong = b == 0xF0 && b1 < 0x90;
        bool too_big = b == 0xF4 && b1 >= 0x90;
        len = (overlong || too_big) ? 0 : 4;
      }
    }
    if (len == 0) {
      if (out.replaced == 0)
        out.first_bad_offset = i;
      ++out.replaced;
      out.text.append(kReplacement);
      ++i;
    } else {
      out.text.append(bytes.substr(i, len));
      i += len;
    }
  }
  return out;
}

struct SourceFile {
  std::string path; ///< relative, '/'-separated
  LanguageId language = LanguageId::unknown;
  std::string content;
  std::string content_hash;
  std::vector<std::string> warnings;

  /// Builds a file from raw bytes: decodes as UTF-8 and hashes the result.
  static SourceFile from_bytes(std::string path, std::string_view bytes,
                               std::optional<LanguageId> language = {}) {
    SourceFile file;
    file.language = detect_language(path, language);
    file.path = std::move(path);
    auto decoded = decode_utf8(bytes);
    if (decoded.replaced > 0)
      file.warnings.push_back(
          "invalid UTF-8: replaced " + std::to_string(decoded.replaced) +
          " byte(s), first at offset " +
          std::to_string(decoded.first_bad_offset));
    file.content = std::move(decoded.text);
    file.content_hash = digest_of(file.content);
    return file;
  }
};

class FileUnreadable : public Error {
public:
  explicit FileUnreadable(const std::string &path)
      : Error("cannot read file: " + path) {}
};

inline std::string read_file_bytes(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw FileUnreadable(path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad())
    throw FileUnreadable(path.string());
  return bytes;
}

inline SourceFile load_source_file(const std::filesystem::path &disk_path,
                                   std::string report_path,
                                   std::optional<LanguageId> language = {}) {
  return SourceFile::from_bytes(std::move(report_path),
                                read_file_bytes(disk_path), language);
}

} // namespace malscan
