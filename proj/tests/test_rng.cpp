#include <doctest.h>

#include <cmath>
#include <vector>

#include "uvt/rng.hpp"

using uvt::RngStream;

TEST_CASE("same seed and stream reproduce the sequence") {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  RngStream c(42, 7), d(42, 7);
  for (int i = 0; i < 1000; ++i) CHECK(c.normal() == d.normal());
}

TEST_CASE("different streams decorrelate") {
  RngStream a(42, 0), b(42, 1), c(43, 0);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t x = a.next_u64();
    same_ab += x == b.next_u64();
    same_ac += x == c.next_u64();
  }
  CHECK(same_ab == 0);
  CHECK(same_ac == 0);
}

TEST_CASE("uniform lies in [0,1) with the right mean") {
  RngStream rng(1, 0);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.005);
}

TEST_CASE("uniform(lo, hi) respects the bounds") {
  RngStream rng(2, 0);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(-3.0, 5.0);
    REQUIRE(u >= -3.0);
    REQUIRE(u < 5.0);
  }
}

TEST_CASE("normal moments match the standard normal") {
  RngStream rng(3, 0);
  const int n = 200000;
  double m1 = 0.0, m2 = 0.0, m4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    m1 += x;
    m2 += x * x;
    m4 += x * x * x * x;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  CHECK(std::abs(m1) < 0.01);
  CHECK(std::abs(m2 - 1.0) < 0.02);
  CHECK(std::abs(m4 - 3.0) < 0.1);
}

TEST_CASE("normal tail frequencies are sane") {
  RngStream rng(4, 0);
  const int n = 100000;
  int beyond2 = 0;
  for (int i = 0; i < n; ++i) beyond2 += std::abs(rng.normal()) > 2.0;
  // P(|Z| > 2) = 0.0455
  CHECK(beyond2 > 3900);
  CHECK(beyond2 < 5200);
}
