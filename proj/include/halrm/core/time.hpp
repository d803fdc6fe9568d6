#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace halrm {

using Timestamp = std::chrono::sys_seconds;
using Days = std::chrono::duration<double, std::ratio<86400>>;

// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS[.fff]]" with an optional
// trailing "Z" or "+00:00". Sub-second digits are truncated. Offsets other
// than UTC are applied.
std::optional<Timestamp> parse_timestamp(std::string_view text);

// Throws ValidationError on unparseable input.
Timestamp require_timestamp(std::string_view text);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(Timestamp ts);

// NVD API date parameter form: "YYYY-MM-DDTHH:MM:SS.000"
std::string format_nvd_timestamp(Timestamp ts);

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0, int minute = 0,
                         int second = 0);

}  // namespace halrm
