#pragma once

#include <string>
#include <string_view>

namespace baitwatch {

// Lowercase hex SHA-256 digest (64 chars).
std::string sha256_hex(std::string_view data);

// SHA-256 of a file's contents; throws std::runtime_error if unreadable.
std::string sha256_file(const std::string& path);

}  // namespace baitwatch
