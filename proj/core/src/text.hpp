#pragma once

// Small string helpers shared by the pipeline stages.

#include <string>
#include <string_view>
#include <vector>

namespace factloop::detail {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Collapses runs of whitespace to one space and trims the ends.
std::string squash_whitespace(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

/// Lower-cased host of a URL, without scheme, port or path.
std::string link_host(std::string_view link);

/// Number of UTF-8 code points (invalid bytes count as one each).
std::size_t utf8_length(std::string_view s);

/// First `max_chars` code points of `s`; never splits a multi-byte sequence.
std::string utf8_truncate(std::string_view s, std::size_t max_chars);

/// Strips a surrounding pair of double quotes, if present.
std::string unquote(std::string_view s);

}  // namespace factloop::detail
