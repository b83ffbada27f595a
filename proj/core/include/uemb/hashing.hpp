#pragma once

#include <string>
#include <string_view>

namespace uemb {

// Hex-encoded SHA-256 digest of `data`.
std::string sha256_hex(std::string_view data);

// Hex-encoded SHA-256 digest of a file's bytes.
std::string file_sha256(const std::string& path);

}  // namespace uemb
