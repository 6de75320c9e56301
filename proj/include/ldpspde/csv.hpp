#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ldp {

/// Shortest decimal string that parses back to exactly `x` ("inf", "-inf", "nan" otherwise).
std::string format_double(double x);

/// Parses a double; throws ValidationError naming `what` on failure.
double parse_double(std::string_view text, std::string_view what);

/// Splits on `sep`, trimming surrounding whitespace from each field.
std::vector<std::string> split_fields(std::string_view line, char sep);

std::string_view trim(std::string_view s);

/// Writes one comma-separated row followed by '\n'.
void write_csv_row(std::ostream& os, std::span<const std::string> fields);
void write_csv_row(std::ostream& os, std::initializer_list<std::string> fields);

}  // namespace ldp
