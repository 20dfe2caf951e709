#pragma once

#include <istream>
#include <string>
#include <vector>

namespace aedopt {

// Shortest round-trip decimal representation; all numeric artifact output
// goes through this so identical runs produce identical bytes.
std::string fmt_double(double v);

// Comma-split with whitespace trimming. No quoting support: none of the
// project formats needs embedded commas.
std::vector<std::string> split_csv(const std::string& line);

bool parse_double(const std::string& s, double& out);
bool parse_long(const std::string& s, long long& out);

// Reads the next data line, skipping blank lines and '#' comment lines.
bool next_data_line(std::istream& in, std::string& line);

}  // namespace aedopt
