#include "asmqa/unicode.hpp"

namespace asmqa::unicode {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Returns the sequence length implied by a lead byte, or 0 for an invalid lead.
std::size_t sequence_length(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead & 0xE0) == 0xC0) return 2;
    if ((lead & 0xF0) == 0xE0) return 3;
    if ((lead & 0xF8) == 0xF0) return 4;
    return 0;
}

// Decodes one code point at `pos`; advances `pos` by the consumed byte count.
char32_t next(std::string_view s, std::size_t& pos) {
    const auto lead = static_cast<unsigned char>(s[pos]);
    const std::size_t len = sequence_length(lead);
    if (len == 0 || pos + len > s.size()) {
        ++pos;
        return kReplacement;
    }
    if (len == 1) {
        ++pos;
        return lead;
    }
    char32_t cp = lead & (0x7F >> len);
    for (std::size_t i = 1; i < len; ++i) {
        const auto c = static_cast<unsigned char>(s[pos + i]);
        if ((c & 0xC0) != 0x80) {
            ++pos;
            return kReplacement;
        }
        cp = (cp << 6) | (c & 0x3F);
    }
    pos += len;
    return cp;
}

}  // namespace

std::u32string decode(std::string_view utf8) {
    std::u32string out;
    out.reserve(utf8.size());
    std::size_t pos = 0;
    while (pos < utf8.size()) out.push_back(next(utf8, pos));
    return out;
}

void append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string encode(std::u32string_view code_points) {
    std::string out;
    out.reserve(code_points.size());
    for (char32_t cp : code_points) append(out, cp);
    return out;
}

std::size_t length(std::string_view utf8) {
    std::size_t n = 0;
    std::size_t pos = 0;
    while (pos < utf8.size()) {
        next(utf8, pos);
        ++n;
    }
    return n;
}

std::size_t byte_offset(std::string_view utf8, std::size_t cp_index) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < cp_index && pos < utf8.size(); ++i) next(utf8, pos);
    return pos;
}

std::string substr(std::string_view utf8, std::size_t begin, std::size_t end) {
    const std::size_t b = byte_offset(utf8, begin);
    const std::size_t e = byte_offset(utf8, end);
    return std::string(utf8.substr(b, e > b ? e - b : 0));
}

bool is_cjk(char32_t cp) {
    return (cp >= 0x4E00 && cp <= 0x9FFF)     // unified ideographs
           || (cp >= 0x3400 && cp <= 0x4DBF)  // extension A
           || (cp >= 0x20000 && cp <= 0x2A6DF)
           || (cp >= 0xF900 && cp <= 0xFAFF)  // compatibility ideographs
           || (cp >= 0x3000 && cp <= 0x303F)  // CJK punctuation
           || (cp >= 0xFF00 && cp <= 0xFFEF)  // half/full-width forms
           || (cp >= 0x3040 && cp <= 0x30FF)  // kana
           || (cp >= 0xAC00 && cp <= 0xD7AF);  // hangul
}

bool is_space(char32_t cp) {
    switch (cp) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

char32_t fold_digit_width(char32_t cp) {
    if (cp >= 0xFF10 && cp <= 0xFF19) return U'0' + (cp - 0xFF10);
    return cp;
}

std::vector<std::string> split_whitespace(std::string_view utf8) {
    std::vector<std::string> out;
    std::string current;
    std::size_t pos = 0;
    while (pos < utf8.size()) {
        const std::size_t start = pos;
        const char32_t cp = next(utf8, pos);
        if (is_space(cp)) {
            if (!current.empty()) out.push_back(std::move(current));
            current.clear();
        } else {
            current.append(utf8.substr(start, pos - start));
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

}  // namespace asmqa::unicode
