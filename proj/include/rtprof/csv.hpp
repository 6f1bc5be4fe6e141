#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rtprof::csv {

// Splits one unquoted CSV record on commas, trimming surrounding whitespace.
std::vector<std::string_view> split(std::string_view line);

std::string_view trim(std::string_view text);

// Whole-field decimal parse; std::nullopt on trailing garbage or empty input.
std::optional<double> parse_double(std::string_view text);

// Shortest representation that round-trips.
std::string format(double value);

// Quotes a text field when it contains a comma, quote or line break.
std::string quote(std::string_view field);

}  // namespace rtprof::csv
