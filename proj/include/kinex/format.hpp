#pragma once

#include <string>

namespace kinex {

// 12 significant digits, shortest form, '.' separator regardless of locale.
std::string format_g12(double value);

// Shortest decimal text that parses back to the same double.
std::string format_exact(double value);

// Locale-independent full-string parse; throws InvalidArgument on junk.
double parse_double(const std::string& text);

}  // namespace kinex
