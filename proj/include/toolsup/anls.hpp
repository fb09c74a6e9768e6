#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace toolsup::rewards {

/// Edit distance over Unicode code points (invalid UTF-8 bytes count as
/// single code points).
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Lowercases ASCII and trims surrounding whitespace.
std::string anls_normalize(std::string_view s);

/// Max over references of 1 - NL(pred, ref), where a normalized distance
/// NL >= `threshold` scores 0.
double anls(std::string_view pred, std::span<const std::string> refs, double threshold = 0.5);

}  // namespace toolsup::rewards
