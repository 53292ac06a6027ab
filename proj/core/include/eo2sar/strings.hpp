#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eo2sar {

// Shortest decimal form that parses back to the same double ("0.5", "31.07").
std::string format_double(double value);

std::optional<double> try_parse_double(std::string_view text);
std::optional<int64_t> try_parse_int(std::string_view text);

// Splits on every occurrence of sep; "a,,b" gives three fields.
std::vector<std::string> split(std::string_view text, char sep);

std::string_view trim(std::string_view text);

}  // namespace eo2sar
