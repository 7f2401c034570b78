#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace cellvote {

// Seconds since the Unix epoch, UTC.
using Seconds = std::int64_t;

inline constexpr Seconds kMinute = 60;
inline constexpr Seconds kHour = 60 * kMinute;
inline constexpr Seconds kDay = 24 * kHour;

// "2024-03-01T12:00:00Z"
std::string format_iso8601(Seconds t);

// Accepts YYYY-MM-DDTHH:MM:SS with optional fractional seconds and a
// trailing Z or +HH:MM / -HH:MM offset. A bare integer is read as epoch
// seconds. Throws Error(ParseError).
Seconds parse_iso8601(std::string_view text);

Seconds system_now();

}  // namespace cellvote
