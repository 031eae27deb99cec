#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace fewskel {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`, so readers see
/// either the old or the new content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace fewskel
