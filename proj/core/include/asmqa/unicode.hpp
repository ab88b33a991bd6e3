#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace asmqa::unicode {

/// Decodes UTF-8 into code points. Malformed bytes decode to U+FFFD, one per byte.
std::u32string decode(std::string_view utf8);

std::string encode(std::u32string_view code_points);
void append(std::string& out, char32_t cp);

/// Number of unicode scalar values in a UTF-8 string.
std::size_t length(std::string_view utf8);

/// Byte offset of the code point with index `cp_index` (or size() when past the end).
std::size_t byte_offset(std::string_view utf8, std::size_t cp_index);

/// Code-point based substring, [begin, end).
std::string substr(std::string_view utf8, std::size_t begin, std::size_t end);

bool is_cjk(char32_t cp);
bool is_space(char32_t cp);

/// Full-width digits U+FF10..U+FF19 become ASCII digits.
char32_t fold_digit_width(char32_t cp);

/// Splits on unicode whitespace, dropping empty pieces.
std::vector<std::string> split_whitespace(std::string_view utf8);

}  // namespace asmqa::unicode
