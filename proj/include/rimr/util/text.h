#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rimr::text {

bool is_blank(std::string_view s);
std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// ASCII case-insensitive substring search; npos when absent.
std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from = 0);
bool icontains(std::string_view haystack, std::string_view needle);
bool istarts_with(std::string_view s, std::string_view prefix);

std::vector<std::string_view> split_lines(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::size_t word_count(std::string_view s);

}  // namespace rimr::text
