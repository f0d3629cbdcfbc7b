#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cuneinet::kv {

// Value parsers for key=value configuration; errors name the key.
std::size_t parse_size(std::string_view key, std::string_view value);
std::uint64_t parse_u64(std::string_view key, std::string_view value);
double parse_double(std::string_view key, std::string_view value);
bool parse_bool(std::string_view key, std::string_view value);

std::string format_double(double v);
inline std::string format_bool(bool v) { return v ? "true" : "false"; }

using Pairs = std::vector<std::pair<std::string, std::string>>;

/// `key = value` lines; blank lines and lines starting with '#' are skipped,
/// whitespace around keys and values is trimmed. ParseError on a line
/// without '='.
Pairs parse(std::string_view text);
std::string format(const Pairs& pairs);

}  // namespace cuneinet::kv
