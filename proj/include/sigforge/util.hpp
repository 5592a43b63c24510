#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sigforge::util {

/// CRC32 (IEEE, reflected polynomial 0xEDB88320). Pass the previous value to chain.
uint32_t crc32(const void* data, size_t len, uint32_t crc = 0);
uint32_t crc32(std::string_view s, uint32_t crc = 0);
uint32_t crc32_file(const std::filesystem::path& path);

/// FNV-1a 64-bit string hash.
uint64_t fnv1a64(std::string_view s);

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal that round-trips a double (17 significant digits).
std::string fmt_g17(double v);

std::string to_hex(uint64_t v, int digits);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

}  // namespace sigforge::util
