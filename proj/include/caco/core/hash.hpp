#pragma once

#include <string>
#include <string_view>

namespace caco {

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

/// Line endings folded to "\n" and trailing whitespace-only lines dropped.
std::string normalize_source(std::string_view source);

/// Content-hash id of a candidate program: sha256_hex(normalize_source(source)).
std::string program_id(std::string_view source);

}  // namespace caco
