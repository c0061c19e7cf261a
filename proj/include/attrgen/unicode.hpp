#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Text offsets throughout this codebase count Unicode scalar values, not
// bytes. Documents arrive as UTF-8; everything that slices or indexes them
// goes through the conversions here.
namespace attrgen {

// Invalid byte sequences decode to U+FFFD, one replacement per bad byte.
std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view text);
void append_utf8(char32_t cp, std::string& out);

bool is_space(char32_t cp);
bool is_digit(char32_t cp);
bool is_letter(char32_t cp);
bool is_upper(char32_t cp);
bool is_open_quote(char32_t cp);
// Closing quotes/brackets that may trail a sentence terminator.
bool is_closing_mark(char32_t cp);

char32_t fold_case(char32_t cp);

// Loose-match folding: curly quotes to straight, dash family to '-',
// ellipsis to "...", zero-width characters to nothing.
std::u32string fold_punct(char32_t cp);

// Whitespace-separated tokens.
std::size_t count_words(std::string_view utf8);
std::size_t count_words(std::u32string_view text);
std::vector<std::string> split_words(std::string_view utf8);

}  // namespace attrgen
