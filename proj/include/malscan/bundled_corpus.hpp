#pragma once

#include "malscan/common.hpp"
#include "malscan/embedded_file.hpp"
#include "malscan/generated/corpus_data.hpp"

#include <filesystem>
#include <fstream>
#include <string>

namespace malscan {

inline bool is_corpus_metadata(std::string_view path) {
  return path.ends_with("/manifest.yaml") || path.ends_with("/annotations.yaml");
}

/// Writes the bundled evaluation corpus under `dest` (one directory per
/// project) and returns the number of code files written.
inline std::size_t build_bundled_corpus(const std::filesystem::path &dest) {
  std::size_t code_files = 0;
  for (const auto &f : corpus_data::kFiles) {
    auto target = dest / std::filesystem::path(std::string(f.path));
    std::filesystem::create_directories(target.parent_path());
    std::ofstream out(target, std::ios::binary | std::ios::trunc);
    out.write(f.data.data(), static_cast<std::streamsize>(f.data.size()));
    if (!out)
      throw Error("cannot write " + target.string());
    if (!is_corpus_metadata(f.path))
      ++code_files;
  }
  return code_files;
}

} // namespace malscan
