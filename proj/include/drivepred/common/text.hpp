#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace drivepred {

// Splits one CSV line on commas. Quoting is not supported; none of the
// formats this project reads use it.
std::vector<std::string> split_csv_line(std::string_view line);

std::string_view trim(std::string_view s);

// Strict numeric parsing: the whole field must be consumed.
bool parse_double(std::string_view field, double& out);
bool parse_int(std::string_view field, long long& out);

// Locale-independent shortest-roundtrip-ish formatting used for every table we
// emit, so repeated runs produce byte-identical files.
std::string format_double(double value, int significant = 10);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace drivepred
