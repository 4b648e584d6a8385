#pragma once

// Locale-independent numeric text I/O. Formatting uses the shortest
// representation that round-trips, so written values reload bit-identical.

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>

namespace icboost {

inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Parses a full field as a double. Returns false on trailing junk, empty
// input, or values like "nan"/"inf" that from_chars would otherwise accept.
inline bool parse_finite_double(std::string_view text, double& out) {
    // Tolerate surrounding spaces; fields are otherwise taken verbatim.
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    if (text.empty()) return false;
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return false;
    if (!std::isfinite(v)) return false;
    out = v;
    return true;
}

inline bool parse_long(std::string_view text, long long& out) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    if (text.empty()) return false;
    auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

}  // namespace icboost
