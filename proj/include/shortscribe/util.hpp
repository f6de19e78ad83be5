#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shortscribe::util {

// Hashing / encoding (OpenSSL-backed).
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file_hex(const std::filesystem::path& path);
std::string base64_encode(std::span<const std::uint8_t> bytes);

// Text helpers.
std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
/// Replaces CR/LF with spaces and collapses whitespace runs to one space.
std::string single_line(std::string_view s);

/// "3" for 3.0, "2.5" for 2.5; at most two decimals.
std::string format_seconds(double seconds);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temp file + rename so readers never see partial content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace shortscribe::util
