#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ragforge {

using Rng = std::mt19937_64;

// std::uniform_int_distribution is not bit-stable across standard libraries;
// these helpers are, which keeps seeded fixtures portable.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return n <= 1 ? 0 : static_cast<std::size_t>(rng() % n);
}

inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t basis = 14695981039346656037ull) {
    std::uint64_t h = basis;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// UTF-8 aware length/slicing; "characters" throughout the corpus code means
// code points, not bytes.
inline bool utf8_is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

inline std::size_t utf8_len(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s)
        if (!utf8_is_continuation(c)) ++n;
    return n;
}

// Byte offset just past the first n code points (or s.size() if shorter).
inline std::size_t utf8_offset(std::string_view s, std::size_t n) {
    std::size_t seen = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!utf8_is_continuation(static_cast<unsigned char>(s[i]))) {
            if (seen == n) return i;
            ++seen;
        }
    }
    return s.size();
}

inline std::string_view utf8_prefix(std::string_view s, std::size_t n) {
    return s.substr(0, utf8_offset(s, n));
}

} // namespace ragforge
