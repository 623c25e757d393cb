#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace consult {

// Pre-flight token estimate: ceil(chars / 4).
std::size_t estimate_tokens(std::string_view text);
std::size_t estimate_tokens_for_bytes(std::size_t byte_count);

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
bool starts_with_icase(std::string_view s, std::string_view prefix);
bool ends_with_icase(std::string_view s, std::string_view suffix);

// Lowercased maximal runs of ASCII alphanumerics; everything else separates.
std::vector<std::string> word_tokens(std::string_view text);

// Collapses whitespace runs into single spaces and trims the ends.
std::string collapse_whitespace(std::string_view s);

// Truncates at a UTF-8 code point boundary so the result is <= max_bytes.
std::string utf8_prefix(std::string_view s, std::size_t max_bytes);

std::string sha256_hex(std::string_view data);
std::string base64_encode(std::string_view data);
std::string base64_decode(std::string_view text);

// Random 128-bit hex identifier.
std::string random_id();

// UTC, ISO-8601 with seconds.
std::string utc_timestamp();

}  // namespace consult
