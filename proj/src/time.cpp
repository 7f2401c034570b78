#include "cellvote/time.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>

#include "cellvote/error.hpp"

namespace cellvote {

namespace {

// Days from 1970-01-01 to y-m-d in the proleptic Gregorian calendar.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

[[noreturn]] void bad_timestamp(std::string_view text) {
  throw Error(ErrorKind::ParseError, "invalid timestamp '" + std::string(text) + "'");
}

int read_fixed(std::string_view text, std::size_t pos, std::size_t width, std::string_view whole) {
  if (pos + width > text.size()) bad_timestamp(whole);
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + width, value);
  if (ec != std::errc() || ptr != text.data() + pos + width) bad_timestamp(whole);
  return value;
}

}  // namespace

std::string format_iso8601(Seconds t) {
  const std::chrono::sys_seconds tp{std::chrono::seconds{t}};
  const auto day = std::chrono::floor<std::chrono::days>(tp);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{tp - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

Seconds parse_iso8601(std::string_view text) {
  if (text.empty()) bad_timestamp(text);
  if (text.find('-', 1) == std::string_view::npos) {
    Seconds value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) bad_timestamp(text);
    return value;
  }
  if (text.size() < 19 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':' || text[16] != ':')
    bad_timestamp(text);
  const int year = read_fixed(text, 0, 4, text);
  const int month = read_fixed(text, 5, 2, text);
  const int day = read_fixed(text, 8, 2, text);
  const int hour = read_fixed(text, 11, 2, text);
  const int minute = read_fixed(text, 14, 2, text);
  const int second = read_fixed(text, 17, 2, text);
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60)
    bad_timestamp(text);

  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
  }
  Seconds offset = 0;
  if (pos < text.size()) {
    const char zone = text[pos];
    if (zone == 'Z' && pos + 1 == text.size()) {
      offset = 0;
    } else if ((zone == '+' || zone == '-') && text.size() == pos + 6 && text[pos + 3] == ':') {
      const int oh = read_fixed(text, pos + 1, 2, text);
      const int om = read_fixed(text, pos + 4, 2, text);
      offset = (zone == '+' ? 1 : -1) * (oh * kHour + om * kMinute);
    } else {
      bad_timestamp(text);
    }
  }
  const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
  return days * kDay + hour * kHour + minute * kMinute + second - offset;
}

Seconds system_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace cellvote
