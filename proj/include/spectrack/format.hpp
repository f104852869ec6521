#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "spectrack/errors.hpp"

namespace spectrack {

/// Round-trip-exact, locale-independent double formatting (17 significant
/// digits). All CSV and SVG artifacts go through this so identical runs
/// produce identical bytes.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

/// Strict double parse of an entire token; rejects trailing junk, empty
/// tokens and non-finite spellings are accepted per strtod grammar.
inline bool parse_double(std::string_view tok, double& out) {
    if (tok.empty()) return false;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

/// 64-bit FNV-1a, used for input digests in run manifests.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t state = 0xcbf29ce484222325ull) {
    for (unsigned char c : data) {
        state ^= c;
        state *= 0x100000001b3ull;
    }
    return state;
}

inline std::string fnv1a64_hex(std::uint64_t digest) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

} // namespace spectrack
