#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sce {

std::string_view trim(std::string_view text) noexcept;
std::string to_lower(std::string_view text);
bool contains_icase(std::string_view haystack, std::string_view needle);

// Parses a complete decimal numeral; trailing garbage yields nullopt.
std::optional<double> parse_number(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

// RFC 4180 quoting when needed.
std::string csv_escape(std::string_view field);
std::vector<std::string> csv_split_line(std::string_view line);

// Shortest round-trip representation; "NA" for nullopt.
std::string format_real(std::optional<double> value);
std::string format_fixed(std::optional<double> value, int decimals);

}  // namespace sce
