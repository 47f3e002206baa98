#include <doctest.h>

#include <algorithm>
#include <set>

#include "hpfl/rng.hpp"

using namespace hpfl;

TEST_CASE("same seed gives the same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("derived seeds separate streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 1000; ++r) seen.insert(derive_seed(7, {5, r}));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(7, {1, 2}) != derive_seed(7, {2, 1}));
  CHECK(derive_seed(7, {1}) == derive_seed(7, {1}));
}

TEST_CASE("uniform stays in [0, 1)") {
  Rng r(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("exponential and normal moments") {
  Rng r(3);
  const int n = 200000;
  double se = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double e = r.exponential();
    REQUIRE(e >= 0.0);
    se += e;
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(se / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("index is unbiased over a small range") {
  Rng r(9);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[r.index(7)];
  for (int c : counts) CHECK(c == doctest::Approx(n / 7.0).epsilon(0.05));
}

TEST_CASE("sample returns distinct indices") {
  Rng r(11);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = r.sample(10, 4);
    REQUIRE(s.size() == 4);
    std::sort(s.begin(), s.end());
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
    CHECK(s.back() < 10);
  }
  CHECK(r.sample(5, 5).size() == 5);
  CHECK(r.sample(5, 0).empty());
}
