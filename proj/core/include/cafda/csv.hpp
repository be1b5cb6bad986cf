#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cafda::csv {

/// Splits one CSV record. Double-quoted fields may contain the delimiter;
/// a doubled quote inside quotes is a literal quote.
std::vector<std::string> split_line(std::string_view line, char delimiter = ',');

/// Splits on runs of spaces/tabs (UCI-style whitespace tables).
std::vector<std::string> split_whitespace(std::string_view line);

/// Strict full-field parse; rejects trailing garbage and empty cells.
std::optional<double> parse_double(std::string_view cell);

/// Shortest representation that round-trips through parse_double.
std::string format_double(double value);

std::string_view trim(std::string_view s);

}  // namespace cafda::csv
