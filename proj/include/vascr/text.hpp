#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vascr::text {

// Shortest decimal form that parses back to the same double.
std::string shortest(double v);
// Fixed two fraction digits (currency).
std::string cents(double v);

std::vector<std::string_view> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

// Strict full-string parses; return false on any trailing garbage.
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, long long& out);
bool parse_uint(std::string_view s, unsigned long long& out);

}  // namespace vascr::text
