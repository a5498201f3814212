#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace stylo::unicode {

// Number of code points. Ill-formed sequences count one per bad byte.
std::size_t length(std::string_view utf8);

// Byte offset of every code point start, followed by utf8.size().
std::vector<std::size_t> boundaries(std::string_view utf8);

std::string nfkc(std::string_view utf8);

bool is_white_space(char32_t cp);

void append(std::string& out, char32_t cp);

}  // namespace stylo::unicode
