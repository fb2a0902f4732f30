#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace agrame {

// ASCII case-folding plus whitespace collapsing (runs become one space,
// ends trimmed). Non-ASCII bytes pass through unchanged.
std::string normalize_text(std::string_view text);

// normalize_text(haystack) contains normalize_text(needle).
bool contains_normalized(std::string_view haystack, std::string_view needle);

// Lowercased alphanumeric runs.
std::vector<std::string> word_tokens(std::string_view text);

}  // namespace agrame
