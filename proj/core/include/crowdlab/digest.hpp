#pragma once

#include <string>

namespace crowdlab {

// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace crowdlab
