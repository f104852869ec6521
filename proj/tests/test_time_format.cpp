#include <catch2/catch_amalgamated.hpp>

#include "spectrack/format.hpp"
#include "spectrack/time.hpp"

using namespace spectrack;

TEST_CASE("dotted timestamp parses to calendar fields") {
    auto t = UtcTime::parse_dotted("2004.02.13.15.52.39");
    REQUIRE(t.has_value());
    CHECK(t->year == 2004);
    CHECK(t->month == 2);
    CHECK(t->day == 13);
    CHECK(t->hour == 15);
    CHECK(t->minute == 52);
    CHECK(t->second == 39);
    CHECK(t->to_iso() == "2004-02-13T15:52:39");
    CHECK(t->to_dotted() == "2004.02.13.15.52.39");
}

TEST_CASE("dotted parser rejects malformed names") {
    CHECK_FALSE(UtcTime::parse_dotted("").has_value());
    CHECK_FALSE(UtcTime::parse_dotted("2004.02.13").has_value());
    CHECK_FALSE(UtcTime::parse_dotted("2004-02-13.15.52.39").has_value());
    CHECK_FALSE(UtcTime::parse_dotted("2004.02.13.15.52.39.txt").has_value());
    CHECK_FALSE(UtcTime::parse_dotted("2004.13.13.15.52.39").has_value());
    CHECK_FALSE(UtcTime::parse_dotted("2004.02.30.15.52.39").has_value());
    CHECK_FALSE(UtcTime::parse_dotted("2004.02.13.24.52.39").has_value());
    CHECK_FALSE(UtcTime::parse_dotted("abcd.ef.gh.ij.kl.mn").has_value());
}

TEST_CASE("leap-year validity") {
    CHECK(UtcTime::parse_dotted("2004.02.29.00.00.00").has_value());
    CHECK_FALSE(UtcTime::parse_dotted("2003.02.29.00.00.00").has_value());
    CHECK(UtcTime::parse_dotted("2000.02.29.00.00.00").has_value());
    CHECK_FALSE(UtcTime::parse_dotted("1900.02.29.00.00.00").has_value());
}

TEST_CASE("epoch round-trip and known anchor") {
    const UtcTime epoch{1970, 1, 1, 0, 0, 0};
    CHECK(epoch.epoch_seconds() == 0);

    // frozen oracle value: date -u -d "2004.02.13 15:52:39" +%s
    const UtcTime t{2004, 2, 13, 15, 52, 39};
    CHECK(t.epoch_seconds() == 1076687559);
    CHECK(UtcTime::from_epoch_seconds(1076687559) == t);

    for (std::int64_t s : {-1234567890ll, 0ll, 951782400ll, 1076687559ll, 4102444800ll}) {
        CHECK(UtcTime::from_epoch_seconds(s).epoch_seconds() == s);
    }
}

TEST_CASE("ordering follows time") {
    const UtcTime a{2004, 2, 13, 15, 52, 39};
    const UtcTime b{2004, 2, 13, 15, 52, 40};
    const UtcTime c{2004, 2, 14, 0, 0, 0};
    CHECK(a < b);
    CHECK(b < c);
    CHECK(a == a);
    CHECK(a.plus_seconds(1) == b);
}

TEST_CASE("double formatting round-trips exactly") {
    for (double v : {0.0, -0.0, 1.0, -1.5, 3.141592653589793, 1e-300, -2.2250738585072014e-308,
                     1.7976931348623157e308, 78.125, 0.1}) {
        double back = 0.0;
        REQUIRE(parse_double(fmt_double(v), back));
        CHECK(back == v);
    }
}

TEST_CASE("strict double parsing rejects junk") {
    double out = 0.0;
    CHECK_FALSE(parse_double("", out));
    CHECK_FALSE(parse_double("1.5x", out));
    CHECK_FALSE(parse_double("x1.5", out));
    CHECK_FALSE(parse_double("1.5 ", out));
    CHECK(parse_double("-0.012", out));
    CHECK(out == -0.012);
}

TEST_CASE("csv line splitting keeps empty fields") {
    auto f = split_csv_line("a,b,,d");
    REQUIRE(f.size() == 4);
    CHECK(f[0] == "a");
    CHECK(f[2] == "");
    CHECK(f[3] == "d");
    CHECK(split_csv_line("").size() == 1);
}

TEST_CASE("fnv1a64 matches published test vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
    CHECK(fnv1a64_hex(0xcbf29ce484222325ull) == "cbf29ce484222325");
}
