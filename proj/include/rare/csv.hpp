#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rare {

/// Shortest decimal text that round-trips to the same double. Output is a
/// pure function of the value, so files written from equal data are
/// byte-identical.
std::string format_double(double value);

double parse_double(std::string_view text);

std::vector<std::string> split_csv_line(std::string_view line);

/// Reads a single-column (or first-column) numeric series, skipping a
/// non-numeric header line.
std::vector<double> read_series_csv(std::istream& in);

}  // namespace rare
