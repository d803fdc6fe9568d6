#include <doctest.h>

#include <sstream>

#include "halrm/core/csv.hpp"
#include "halrm/core/cve.hpp"
#include "halrm/core/errors.hpp"
#include "halrm/core/time.hpp"

using namespace halrm;

TEST_CASE("cve id syntax") {
  CHECK(is_cve_id("CVE-2017-11882"));
  CHECK(is_cve_id("CVE-2024-0001"));
  CHECK(is_cve_id("CVE-2021-1234567"));
  CHECK_FALSE(is_cve_id("CVE-2024-001"));
  CHECK_FALSE(is_cve_id("cve-2024-0001"));
  CHECK_FALSE(is_cve_id("CVE-24-0001"));
  CHECK_FALSE(is_cve_id("GHSA-xxxx-yyyy-zzzz"));
  CHECK_FALSE(is_cve_id("CVE-2024-0001a"));
}

TEST_CASE("cve extraction from delimited codes") {
  auto ids = extract_cve_ids("CVE-2017-11882;OSVDB-1234;cve-2018-0802;CVE-2017-11882");
  REQUIRE(ids.size() == 2);
  CHECK(ids[0] == "CVE-2017-11882");
  CHECK(ids[1] == "CVE-2018-0802");
  CHECK(extract_cve_ids("no ids here").empty());
  CHECK(extract_cve_ids("XCVE-2017-11882").empty());
}

TEST_CASE("timestamps parse the feed formats") {
  auto base = make_timestamp(2017, 11, 20, 17, 29);
  CHECK(parse_timestamp("2017-11-20T17:29:00.180") == base);
  CHECK(parse_timestamp("2017-11-20T17:29:00Z") == base);
  CHECK(parse_timestamp("2017-11-20T17:29") == base);
  CHECK(parse_timestamp("2017-11-20T19:29:00+02:00") == base);
  CHECK(parse_timestamp("2017-11-20") == make_timestamp(2017, 11, 20));
  CHECK_FALSE(parse_timestamp("2017-13-01").has_value());
  CHECK_FALSE(parse_timestamp("2017-02-30").has_value());
  CHECK_FALSE(parse_timestamp("yesterday").has_value());
  CHECK_THROWS_AS(require_timestamp("x"), ValidationError);
  CHECK(format_timestamp(base) == "2017-11-20T17:29:00Z");
  CHECK(format_nvd_timestamp(base) == "2017-11-20T17:29:00.000");
  CHECK(parse_timestamp(format_timestamp(base)) == base);
}

TEST_CASE("csv reader handles quoting, embedded newlines and CRLF") {
  std::istringstream in("a,b,c\r\n\"x, y\",\"he said \"\"hi\"\"\",\"two\nlines\"\r\nlast,,\n");
  csv::Reader r(in);
  auto h = r.next();
  REQUIRE(h);
  CHECK(*h == csv::Row{"a", "b", "c"});
  auto row = r.next();
  REQUIRE(row);
  CHECK(r.line() == 2);
  CHECK((*row)[0] == "x, y");
  CHECK((*row)[1] == "he said \"hi\"");
  CHECK((*row)[2] == "two\nlines");
  auto last = r.next();
  REQUIRE(last);
  CHECK(r.line() == 4);
  CHECK(*last == csv::Row{"last", "", ""});
  CHECK_FALSE(r.next().has_value());
}

TEST_CASE("csv unterminated quote is a data error") {
  std::istringstream in("\"open,field\n");
  csv::Reader r(in);
  CHECK_THROWS_AS(r.next(), DataError);
}

TEST_CASE("csv writer quotes only when needed and reads back") {
  csv::Row row{"plain", "with,comma", "with \"quote\"", "multi\nline", ""};
  std::ostringstream out;
  csv::write_row(out, row);
  CHECK(out.str() == "plain,\"with,comma\",\"with \"\"quote\"\"\",\"multi\nline\",\r\n");
  std::istringstream in(out.str());
  csv::Reader r(in);
  CHECK(*r.next() == row);
}

TEST_CASE("double formatting round-trips") {
  CHECK(csv::format_double(0.9799) == "0.9799");
  CHECK(csv::format_double(7.8) == "7.8");
  CHECK(csv::format_double(10.0) == "10");
  double x = 0.1 + 0.2;
  CHECK(std::stod(csv::format_double(x)) == x);
}
