#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dagnet {

/// Exit codes: 0 success, 1 domain error, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// "8,16,32" -> {8, 16, 32}. Throws Error on anything else.
std::vector<std::size_t> parse_width_list(const std::string& text);

/// "5" -> {0, 1, 2, 3, 4}; "3,7" or "5," -> explicit seeds.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// Flat "key = value" lines, '#' comments. Throws ParseError on a line
/// without '=' or with an empty key.
std::vector<std::pair<std::string, std::string>> read_config_text(const std::string& text);

}  // namespace dagnet
