#pragma once

#include <string_view>

namespace malscan {

struct EmbeddedFile {
  std::string_view path;
  std::string_view data;
};

} // namespace malscan
