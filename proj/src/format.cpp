#include "kinex/format.hpp"

#include <array>
#include <charconv>

#include "kinex/error.hpp"

namespace kinex {

std::string format_g12(double value) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                   std::chars_format::general, 12);
    return std::string(buf.data(), end);
}

std::string format_exact(double value) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

double parse_double(const std::string& text) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || first == last) {
        throw InvalidArgument("not a number: '" + text + "'");
    }
    return value;
}

}  // namespace kinex
