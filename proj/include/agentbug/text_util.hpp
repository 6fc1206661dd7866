// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

namespace agentbug::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);

/// Runs of ASCII whitespace become one space; leading/trailing removed.
std::string collapse_whitespace(std::string_view s);

/// Longest prefix of `s` that is at most `max_bytes` long and does not split
/// a UTF-8 sequence.
std::string_view utf8_prefix(std::string_view s, std::size_t max_bytes);

/// Hex-encoded SHA-256.
std::string sha256_hex(std::string_view data);

/// Replaces a string's middle with a marker so the result fits `budget`
/// bytes, keeping three quarters of the budget from the head.
std::string truncate_head_biased(std::string_view s, std::size_t budget);

std::size_t estimate_tokens(std::string_view s);

}  // namespace agentbug::text
