#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "wsiroi/errors.hpp"

namespace wsiroi::detail {

inline std::string read_text_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("file not found", path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed", path);
}

}  // namespace wsiroi::detail
