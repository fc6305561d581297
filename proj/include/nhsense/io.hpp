// io.hpp — locale-independent numeric formatting for CSV and JSON artifacts
#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace nhsense {

// Scientific notation, 17 significant digits, '.' decimal separator always.
inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific, 16);
    return std::string(buf, res.ptr);
}

} // namespace nhsense
