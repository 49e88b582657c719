#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ragforge/util.hpp"

namespace ragforge {

inline std::string_view trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::vector<std::string_view> split_lines(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == '\n') {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

// Paragraphs are runs of non-blank lines; blank lines (whitespace-only) delimit.
inline std::vector<std::string> split_paragraphs(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (auto line : split_lines(s)) {
        if (trim(line).empty()) {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        } else {
            if (!cur.empty()) cur += '\n';
            cur += std::string(line);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// Sentence boundary: '.', '!' or '?' followed by whitespace or end of text.
// Good enough for corpus splitting; abbreviations are not special-cased.
inline std::vector<std::string> split_sentences(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        bool boundary = (c == '.' || c == '!' || c == '?') &&
                        (i + 1 == s.size() || std::isspace(static_cast<unsigned char>(s[i + 1])));
        if (boundary) {
            auto piece = trim(s.substr(start, i + 1 - start));
            if (!piece.empty()) out.emplace_back(piece);
            start = i + 1;
        }
    }
    auto tail = trim(s.substr(start));
    if (!tail.empty()) out.emplace_back(tail);
    return out;
}

// Word characters: ASCII alphanumerics plus any non-ASCII byte, so UTF-8
// words (Turkish and otherwise) stay intact. ASCII letters are lowercased.
inline std::vector<std::string> word_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        bool word = std::isalnum(c) || c >= 0x80;
        if (word) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline std::size_t distinct_token_overlap(std::string_view a, std::string_view b) {
    auto ta = word_tokens(a);
    auto tb = word_tokens(b);
    std::sort(ta.begin(), ta.end());
    ta.erase(std::unique(ta.begin(), ta.end()), ta.end());
    std::sort(tb.begin(), tb.end());
    std::size_t n = 0;
    for (const auto& t : ta)
        if (std::binary_search(tb.begin(), tb.end(), t)) ++n;
    return n;
}

// Multiset token F1 (SQuAD style): overlap counts min occurrences per token.
inline double token_f1(std::string_view candidate, std::string_view reference) {
    auto tc = word_tokens(candidate);
    auto tr = word_tokens(reference);
    if (tc.empty() || tr.empty()) return tc.empty() && tr.empty() ? 1.0 : 0.0;
    std::unordered_map<std::string, std::size_t> counts;
    for (auto& t : tr) ++counts[t];
    std::size_t overlap = 0;
    for (auto& t : tc) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            ++overlap;
            --it->second;
        }
    }
    if (overlap == 0) return 0.0;
    double precision = static_cast<double>(overlap) / static_cast<double>(tc.size());
    double recall = static_cast<double>(overlap) / static_cast<double>(tr.size());
    return 2.0 * precision * recall / (precision + recall);
}

// Whitespace-insensitive view of a text, for "modulo boundary whitespace"
// reconstruction checks.
inline std::string strip_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s)
        if (!std::isspace(c)) out += static_cast<char>(c);
    return out;
}

} // namespace ragforge
