#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace sncert::cli {

// Same digest as `git hash-object`: SHA-1 over "blob <size>\0" + content.
std::string git_blob_hash(std::string_view content);
std::string git_blob_hash_file(const std::filesystem::path& path);

}  // namespace sncert::cli
