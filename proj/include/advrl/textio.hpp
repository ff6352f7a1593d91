#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace advrl {

/// %.17g — value-exact round trip for IEEE doubles.
std::string format_full(double x);

/// Fixed-point with n decimals, for human-facing tables.
std::string format_fixed(double x, int decimals);

std::vector<std::string> split(const std::string& line, char sep);

/// Parses a double, accepting "inf"/"-inf"/"nan". Throws on garbage.
double parse_double(const std::string& s);

}  // namespace advrl
