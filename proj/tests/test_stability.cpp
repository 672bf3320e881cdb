#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "cmrec/errors.hpp"
#include "cmrec/rng.hpp"
#include "cmrec/stability.hpp"

using namespace cmrec;

TEST_CASE("monotone profiles are never staggering") {
  Profile p;
  for (int i = 0; i < 50; ++i) p.push_back(0.1 * i);
  CHECK_FALSE(detect_staggering(p));
}

TEST_CASE("full-range alternation over 8 points is staggering") {
  Profile p = {0, 1, 0, 1, 0, 1, 0, 1};
  // 7 differences, 6 consecutive directional changes.
  CHECK(detect_staggering(p));
}

TEST_CASE("four consecutive changes stay below the default threshold") {
  Profile p = {0, 1, 0, 1, 0, 1, 1, 1};
  // Differences +1,-1,+1,-1,+1,0,0: changes at the first four positions only.
  CHECK_FALSE(detect_staggering(p));
  CHECK(detect_staggering(p, 4));
}

TEST_CASE("constant profiles are never flagged") {
  Profile p(20, 3.5);
  CHECK_FALSE(detect_staggering(p));
  CHECK_FALSE(detect_staggering(p, 0));
}

TEST_CASE("small wiggles below the amplitude threshold do not count") {
  // Range is 1 because of the end points; interior oscillation is 0.5% of it.
  Profile p = {0.0, 0.5, 0.505, 0.5, 0.505, 0.5, 0.505, 0.5, 0.505, 0.5, 1.0};
  CHECK_FALSE(detect_staggering(p));
  CHECK(detect_staggering(p, 5, 0.001));
}

TEST_CASE("a zero difference interrupts a run") {
  Profile p = {0, 1, 0, 1, 0, 0, 1, 0, 1, 0};
  // Runs of 3 changes either side of the flat segment.
  CHECK_FALSE(detect_staggering(p, 4));
  CHECK(detect_staggering(p, 3));
}

TEST_CASE("detection is invariant to positive affine rescaling") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    Profile p;
    const int n = 10 + static_cast<int>(rng.uniform_index(30));
    for (int i = 0; i < n; ++i) p.push_back(rng.unit_double());
    const double a = 0.5 + 3.0 * rng.unit_double();
    const double b = -2.0 + 4.0 * rng.unit_double();
    Profile q;
    for (double v : p) q.push_back(a * v + b);
    for (std::size_t mc : {1u, 3u, 5u}) {
      CHECK(detect_staggering(p, mc) == detect_staggering(q, mc));
    }
  }
}

TEST_CASE("detection is invariant to reversal") {
  Rng rng(78);
  for (int trial = 0; trial < 40; ++trial) {
    Profile p;
    const int n = 8 + static_cast<int>(rng.uniform_index(24));
    for (int i = 0; i < n; ++i) p.push_back(rng.unit_double());
    Profile r(p.rbegin(), p.rend());
    CHECK(detect_staggering(p, 4) == detect_staggering(r, 4));
  }
}

TEST_CASE("profile validation") {
  CHECK_THROWS_AS(detect_staggering({}), DataError);
  CHECK_THROWS_AS(detect_staggering({1.0}), DataError);
  CHECK_THROWS_AS(detect_staggering({0.0, std::numeric_limits<double>::quiet_NaN()}), DataError);
  CHECK_THROWS_AS(detect_staggering({0.0, std::numeric_limits<double>::infinity()}), DataError);
  CHECK_THROWS_AS(detect_staggering({0.0, 1.0}, 5, -0.5), std::invalid_argument);
  CHECK_FALSE(detect_staggering({0.0, 1.0}));
}

TEST_CASE("zeroing flags the named entries and nothing else") {
  PerformanceMatrix m({"i1", "i2"}, {"c1", "c2"},
                      {0.73, 0.5, std::nullopt, 0.0});
  auto z = apply_stability_zeroing(m, {{"i1", "c1"}, {"i2", "c2"}});
  CHECK(z.entry(0, 0) == 0.0);
  CHECK(z.entry(0, 1) == 0.5);
  CHECK_FALSE(z.entry(1, 0).has_value());
  CHECK(z.entry(1, 1) == 0.0);
}

TEST_CASE("no flags is the identity") {
  PerformanceMatrix m({"i1"}, {"c1", "c2"}, {0.2, std::nullopt});
  auto z = apply_stability_zeroing(m, {});
  CHECK(z.entries() == m.entries());
  CHECK(z.item_ids() == m.item_ids());
  CHECK(z.case_ids() == m.case_ids());
}

TEST_CASE("zeroing is idempotent and never increases an entry") {
  PerformanceMatrix m({"i1", "i2"}, {"c1"},
                      {std::optional<double>(0.9), std::optional<double>(0.0)});
  std::vector<std::pair<std::string, std::string>> flags = {{"i1", "c1"}, {"i2", "c1"}};
  auto once = apply_stability_zeroing(m, flags);
  auto twice = apply_stability_zeroing(once, flags);
  CHECK(once.entries() == twice.entries());
  for (std::size_t i = 0; i < m.n_items(); ++i) {
    CHECK(once.value(i, 0) <= m.value(i, 0));
  }
}

TEST_CASE("zeroing rejects bad flags") {
  PerformanceMatrix m({"i1"}, {"c1", "c2"}, {0.2, std::nullopt});
  CHECK_THROWS_AS(apply_stability_zeroing(m, {{"nope", "c1"}}), DataError);
  CHECK_THROWS_AS(apply_stability_zeroing(m, {{"i1", "nope"}}), DataError);
  CHECK_THROWS_AS(apply_stability_zeroing(m, {{"i1", "c2"}}), DataError);
}
