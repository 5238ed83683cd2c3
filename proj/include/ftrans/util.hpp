#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ftrans {

namespace fs = std::filesystem;

// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

std::string read_file(const fs::path& path);

// Writes to a sibling temporary file and renames it over `path`, so readers
// observe either the old or the new content.
void write_file_atomic(const fs::path& path, std::string_view content);

// Directory containing the bundled prompt templates and corpus. Honors the
// FTRANS_RESOURCES environment variable, otherwise the build-time location.
fs::path resource_dir();

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split_lines(std::string_view text);

// Last `n` lines of `text`.
std::string tail_lines(std::string_view text, std::size_t n);

// Seconds since the Unix epoch, as an ISO-8601 UTC string.
std::string utc_timestamp();

}  // namespace ftrans
