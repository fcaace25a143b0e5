#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace vidcurate::utf8 {

// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD one byte at
// a time, so decoding never fails.
std::vector<char32_t> decode(std::string_view text);

void append(std::string& out, char32_t cp);

std::string encode(const std::vector<char32_t>& cps);

// Number of code points.
std::size_t length(std::string_view text);

} // namespace vidcurate::utf8
