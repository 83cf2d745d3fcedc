#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace markerplan {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string to_hex(std::uint64_t value);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

/// Fixed 12-significant-digit rendering used by every CSV writer.
std::string format_value(double value);

}  // namespace markerplan
