#include "halrm/core/time.hpp"

#include <cctype>
#include <cstdio>

#include "halrm/core/errors.hpp"

namespace halrm {
namespace {

bool read_int(std::string_view s, std::size_t& pos, std::size_t width, int& out) {
  if (pos + width > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < width; ++i) {
    char c = s[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    v = v * 10 + (c - '0');
  }
  pos += width;
  out = v;
  return true;
}

bool expect(std::string_view s, std::size_t& pos, char c) {
  if (pos < s.size() && s[pos] == c) {
    ++pos;
    return true;
  }
  return false;
}

}  // namespace

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour, int minute,
                         int second) {
  using namespace std::chrono;
  sys_days d = year_month_day{std::chrono::year{year}, std::chrono::month{month},
                              std::chrono::day{day}};
  return d + hours{hour} + minutes{minute} + seconds{second};
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);

  std::size_t pos = 0;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (!read_int(s, pos, 4, y) || !expect(s, pos, '-') || !read_int(s, pos, 2, mo) ||
      !expect(s, pos, '-') || !read_int(s, pos, 2, d)) {
    return std::nullopt;
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31) return std::nullopt;
  int offset_minutes = 0;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
    ++pos;
    if (!read_int(s, pos, 2, h) || !expect(s, pos, ':') || !read_int(s, pos, 2, mi)) {
      return std::nullopt;
    }
    if (expect(s, pos, ':')) {
      if (!read_int(s, pos, 2, sec)) return std::nullopt;
      if (expect(s, pos, '.')) {
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
      }
    }
    if (pos < s.size()) {
      if (s[pos] == 'Z') {
        ++pos;
      } else if (s[pos] == '+' || s[pos] == '-') {
        int sign = s[pos] == '-' ? -1 : 1;
        ++pos;
        int oh = 0, om = 0;
        if (!read_int(s, pos, 2, oh)) return std::nullopt;
        expect(s, pos, ':');
        if (!read_int(s, pos, 2, om)) return std::nullopt;
        offset_minutes = sign * (oh * 60 + om);
      }
    }
    if (pos != s.size()) return std::nullopt;
    if (h > 23 || mi > 59 || sec > 60) return std::nullopt;
  }
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(mo)},
                                  std::chrono::day{unsigned(d)}};
  if (!ymd.ok()) return std::nullopt;
  return make_timestamp(y, unsigned(mo), unsigned(d), h, mi, sec) -
         std::chrono::minutes{offset_minutes};
}

Timestamp require_timestamp(std::string_view text) {
  auto ts = parse_timestamp(text);
  if (!ts) throw ValidationError("invalid timestamp: '" + std::string(text) + "'");
  return *ts;
}

namespace {

struct Fields {
  int y;
  unsigned mo, d;
  long h, mi, s;
};

Fields split(Timestamp ts) {
  using namespace std::chrono;
  auto dp = floor<days>(ts);
  year_month_day ymd{dp};
  auto rem = ts - dp;
  long total = static_cast<long>(rem.count());
  return {int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()), total / 3600,
          (total / 60) % 60, total % 60};
}

}  // namespace

std::string format_timestamp(Timestamp ts) {
  auto f = split(ts);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", f.y, f.mo, f.d, f.h, f.mi,
                f.s);
  return buf;
}

std::string format_nvd_timestamp(Timestamp ts) {
  auto f = split(ts);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ld.000", f.y, f.mo, f.d, f.h,
                f.mi, f.s);
  return buf;
}

}  // namespace halrm
