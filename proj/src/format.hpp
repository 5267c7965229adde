#pragma once

#include <charconv>
#include <string>

namespace peelnet::detail {

// Shortest round-trip decimal form; keeps CSV output byte-stable.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace peelnet::detail
