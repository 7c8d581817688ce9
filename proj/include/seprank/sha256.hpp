#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace seprank {

// FIPS 180-4 SHA-256; returns the lowercase hex digest.
std::string sha256_hex(const unsigned char* data, std::size_t len);
std::string sha256_hex(const std::vector<unsigned char>& data);
std::string sha256_file(const std::string& path);

}  // namespace seprank
