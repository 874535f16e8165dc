#include <limits>
#include <random>

#include "doctest.h"
#include "vascr/seeding.hpp"
#include "vascr/text.hpp"

using namespace vascr;

TEST_CASE("shortest form round-trips every double") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> exp_dist(-300.0, 300.0);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::pow(10.0, exp_dist(rng)) * (i % 2 ? -1.0 : 1.0);
    double back = 0;
    REQUIRE(text::parse_double(text::shortest(v), back));
    CHECK(back == v);
  }
  CHECK(text::shortest(0.5) == "0.5");
  CHECK(text::cents(1234.5) == "1234.50");
}

TEST_CASE("strict parses reject trailing garbage") {
  double d = 0;
  long long i = 0;
  unsigned long long u = 0;
  CHECK(text::parse_double(" 1.25 ", d));
  CHECK(d == 1.25);
  CHECK_FALSE(text::parse_double("1.25x", d));
  CHECK_FALSE(text::parse_double("", d));
  CHECK(text::parse_int("-42", i));
  CHECK(i == -42);
  CHECK_FALSE(text::parse_int("4.2", i));
  CHECK_FALSE(text::parse_uint("-1", u));
  CHECK(text::parse_uint("18446744073709551615", u));
  CHECK(u == std::numeric_limits<unsigned long long>::max());
}

TEST_CASE("split keeps empty fields") {
  const auto parts = text::split("a,,b,", ',');
  REQUIRE(parts.size() == 4);
  CHECK(parts[1].empty());
  CHECK(parts[3].empty());
  CHECK(text::trim("  x \t") == "x");
}

TEST_CASE("module seeds differ by name and are stable") {
  CHECK(derive_seed(1, "portfolio") != derive_seed(1, "scenarios"));
  CHECK(derive_seed(1, "portfolio") != derive_seed(2, "portfolio"));
  CHECK(derive_seed(5, "valuation") == derive_seed(5, "valuation"));
  CHECK(stream_seed(3, 10) != stream_seed(3, 11));
  // FNV-1a reference values.
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}
