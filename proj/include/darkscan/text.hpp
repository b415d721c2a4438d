#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace darkscan {

// 64-bit FNV-1a over raw bytes.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

namespace detail {

// Decodes one UTF-8 code point starting at `i`; advances `i` past it.
// Malformed bytes decode as a single-byte code point so tokenization
// stays deterministic on arbitrary input.
inline char32_t decode_utf8(std::string_view s, std::size_t& i) {
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    unsigned char b0 = byte(i);
    if (b0 < 0x80) {
        i += 1;
        return b0;
    }
    std::size_t len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        i += 1;
        return b0;
    }
    if (i + len > s.size()) {
        i += 1;
        return b0;
    }
    for (std::size_t k = 1; k < len; ++k) {
        unsigned char bk = byte(i + k);
        if ((bk & 0xC0) != 0x80) {
            i += 1;
            return b0;
        }
        cp = (cp << 6) | (bk & 0x3F);
    }
    i += len;
    return cp;
}

// Non-ASCII code points count as word characters except the common
// punctuation, symbol and dash blocks. Letters outside ASCII pass
// through unchanged (no case folding beyond ASCII).
inline bool is_word_cp(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    }
    if (cp >= 0x00A0 && cp <= 0x00BF) return false;  // Latin-1 punctuation
    if (cp == 0x00D7 || cp == 0x00F7) return false;  // multiplication / division signs
    if (cp >= 0x2000 && cp <= 0x206F) return false;  // general punctuation (dashes, quotes)
    if (cp >= 0x20A0 && cp <= 0x20CF) return false;  // currency symbols
    if (cp >= 0x2100 && cp <= 0x2BFF) return false;  // arrows, math, misc symbols
    if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
    if (cp >= 0xFE30 && cp <= 0xFE6F) return false;  // compatibility forms
    if (cp >= 0xFF01 && cp <= 0xFF0F) return false;  // fullwidth punctuation
    if (cp >= 0xFF1A && cp <= 0xFF20) return false;
    if (cp >= 0xFF3B && cp <= 0xFF40) return false;
    if (cp >= 0xFF5B && cp <= 0xFF65) return false;
    return true;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

}  // namespace detail

// The canonical tokenizer: ASCII-lowercased, split on non-alphanumeric
// runs, empty tokens dropped. Numerals stay tokens ("only 1 left").
inline std::vector<std::string> canonicalize_text(std::string_view raw) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < raw.size()) {
        char32_t cp = detail::decode_utf8(raw, i);
        if (detail::is_word_cp(cp)) {
            if (cp >= 'A' && cp <= 'Z') cp += 32;
            detail::append_utf8(current, cp);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

// Joins tokens with single spaces; the tokenizer's fixed point.
inline std::string canonical_join(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

// Prompt identity canonicalization: ASCII-lowercased, whitespace runs
// collapsed to one space, leading/trailing whitespace stripped.
inline std::string canonicalize_prompt(std::string_view raw) {
    std::string out;
    bool pending_space = false;
    for (char ch : raw) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        if (c >= 'A' && c <= 'Z') c += 32;
        out += static_cast<char>(c);
    }
    return out;
}

// Stable identity of a prompt's text across whitespace/case variation.
inline std::uint64_t prompt_hash(std::string_view raw_prompt) {
    return fnv1a64(canonicalize_prompt(raw_prompt));
}

}  // namespace darkscan
