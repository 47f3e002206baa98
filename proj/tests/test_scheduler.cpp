#include <doctest.h>

#include <algorithm>

#include "hpfl/rng.hpp"
#include "hpfl/scheduler.hpp"

using namespace hpfl;

namespace {

SelectionVector from_mask(unsigned mask, std::size_t k) {
  SelectionVector s = SelectionVector::none(k);
  for (std::size_t i = 0; i < k; ++i) s.pi[i] = (mask >> i) & 1u;
  return s;
}

ScheduleInput fresh(const std::vector<double>& g, const std::vector<double>& o) {
  return {std::vector<int>(g.size(), 0), g, o};
}

}  // namespace

TEST_CASE("threshold arithmetic") {
  // phi I = 10, O = 5, rho = 0.5: 5 >= 2.5.
  const auto s = threshold_select({10.0}, {5.0}, 0.5, 1.0);
  CHECK(s.pi[0] == 1);
  // Ties select.
  CHECK(threshold_select({1.0}, {1.0}, 0.5, 1.0).pi[0] == 1);
  CHECK(threshold_select({1.0}, {1.0 + 1e-12}, 0.5, 1.0).pi[0] == 0);
}

TEST_CASE("rho = 1 keeps the top a_max by importance") {
  SchedulerConfig cfg;
  cfg.rho = 1.0;
  cfg.a_max = 2;
  Rng rng(1);
  const auto s = schedule(fresh({3, 9, 1, 7}, {1e9, 1e9, 1e9, 1e9}), cfg, 1.0, rng);
  CHECK(s == SelectionVector({0, 1, 0, 1}));
}

TEST_CASE("rho = 0 selects nothing on its own and falls back to the best score") {
  SchedulerConfig cfg;
  cfg.rho = 0.0;
  cfg.a_max = 3;
  Rng rng(1);
  const auto s = schedule(fresh({3, 9, 1, 7}, {4, 2, 3, 5}), cfg, 1.0, rng);
  CHECK(s == SelectionVector({0, 1, 0, 0}));
  CHECK(s.a_effective() == 1);
}

TEST_CASE("the decision is monotone in rho") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const double g = rng.uniform(0, 10), o = rng.uniform(0, 10), phi = rng.uniform(0.01, 2);
    int prev = 0, flips = 0;
    for (int i = 0; i <= 100; ++i) {
      const int d = threshold_select({g}, {o}, i / 100.0, phi).pi[0];
      CHECK(d >= prev);
      flips += d != prev;
      prev = d;
    }
    CHECK(flips <= 1);
  }
}

TEST_CASE("scaling importance and latency together leaves the decision unchanged") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> g(6), o(6);
    for (int k = 0; k < 6; ++k) {
      g[k] = rng.uniform(0, 5);
      o[k] = rng.uniform(0, 5);
    }
    const double c = rng.uniform(0.1, 10), rho = rng.uniform(), phi = rng.uniform(0.1, 2);
    std::vector<double> gs = g, os = o;
    for (int k = 0; k < 6; ++k) {
      gs[k] *= c;
      os[k] *= c;
    }
    CHECK(threshold_select(g, o, rho, phi) == threshold_select(gs, os, rho, phi));
  }
}

TEST_CASE("objective evaluation") {
  CHECK(objective_value(SelectionVector::none(3), {1, 2, 3}, {1, 2, 3}, 0.5, 1.0) == 0.0);
  CHECK(objective_value(SelectionVector({1}), {4.0}, {3.0}, 0.25, 2.0) == doctest::Approx(-0.25 * 2 * 4 + 0.75 * 3));
  CHECK(objective_value(SelectionVector({1, 1}), {1.0, 2.0}, {5.0, 3.0}, 0.5, 1.0) == doctest::Approx(-1.5 + 2.5));
  CHECK(separable_objective(SelectionVector({1, 1}), {1.0, 2.0}, {5.0, 3.0}, 0.5, 1.0) ==
        doctest::Approx(-1.5 + 4.0));
}

TEST_CASE("threshold selection is optimal for the separable objective") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.index(10);
    std::vector<double> g(k), o(k);
    for (std::size_t i = 0; i < k; ++i) {
      g[i] = rng.uniform(0, 5);
      o[i] = rng.uniform(0, 5);
    }
    const double rho = rng.uniform(), phi = rng.uniform(0.1, 2);
    const auto sel = threshold_select(g, o, rho, phi);
    const double got = separable_objective(sel, g, o, rho, phi);
    double best = std::numeric_limits<double>::infinity();
    for (unsigned m = 0; m < (1u << k); ++m) best = std::min(best, separable_objective(from_mask(m, k), g, o, rho, phi));
    CHECK(got == best);
  }
}

TEST_CASE("capped selection is optimal among subsets of at most a_max") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.index(9);
    std::vector<double> g(k), o(k);
    for (std::size_t i = 0; i < k; ++i) {
      g[i] = rng.uniform(0, 5);
      o[i] = rng.uniform(0, 5);
    }
    SchedulerConfig cfg;
    cfg.rho = rng.uniform(0.2, 1.0);
    cfg.a_max = 1 + static_cast<int>(rng.index(k));
    cfg.force_select_stale = false;
    const double phi = rng.uniform(0.1, 2);
    const auto sel = schedule(fresh(g, o), cfg, phi, rng);
    CHECK(sel.a_effective() <= cfg.a_max);
    CHECK(sel.a_effective() >= 1);
    double best = std::numeric_limits<double>::infinity();
    for (unsigned m = 0; m < (1u << k); ++m) {
      const auto s = from_mask(m, k);
      if (s.a_effective() > cfg.a_max) continue;
      best = std::min(best, separable_objective(s, g, o, cfg.rho, phi));
    }
    const auto pass = threshold_select(g, o, cfg.rho, phi);
    if (pass.a_effective() > 0) CHECK(separable_objective(sel, g, o, cfg.rho, phi) == best);
  }
}

TEST_CASE("mandatory set keeps every ES within the bound") {
  // Anyone at the bound must go now.
  CHECK(mandatory_set({2, 0, 1, 2}, 2, 3) == std::vector<int>{0, 3});
  // Three ESs at tau = 1 need picks within two rounds, two picks per round: one must go now.
  CHECK(mandatory_set({1, 1, 1, 0, 0}, 2, 2).size() == 1);
  // Three fresh ESs, one pick per round, bound 2: the budget is tight, so one goes every round.
  CHECK(mandatory_set({0, 0, 0}, 2, 1).size() == 1);
  CHECK(mandatory_set({0, 0, 0}, 2, 2).empty());
  // Most stale first.
  CHECK(mandatory_set({0, 1, 0, 1, 1}, 2, 2) == std::vector<int>{1});

  // Simulated adversarial scheduling: the remaining picks always avoid the most stale ESs.
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const int a = 1 + static_cast<int>(rng.index(3));
    const int S = 1 + static_cast<int>(rng.index(3));
    const int k = a + static_cast<int>(rng.index(static_cast<std::size_t>(a * S + 1)));
    REQUIRE(k <= a * (S + 1));
    std::vector<int> tau(static_cast<std::size_t>(k), 0);
    for (int round = 0; round < 30; ++round) {
      const auto m = mandatory_set(tau, S, a);
      REQUIRE(static_cast<int>(m.size()) <= a);
      std::vector<int> pick(static_cast<std::size_t>(k), 0);
      for (int i : m) pick[static_cast<std::size_t>(i)] = 1;
      int extra = a - static_cast<int>(m.size());
      for (int i = 0; i < k && extra > 0; ++i)
        if (!pick[static_cast<std::size_t>(i)] && tau[static_cast<std::size_t>(i)] == 0) {
          pick[static_cast<std::size_t>(i)] = 1;
          --extra;
        }
      for (int i = 0; i < k; ++i) {
        auto& t = tau[static_cast<std::size_t>(i)];
        t = pick[static_cast<std::size_t>(i)] ? 0 : t + 1;
        REQUIRE(t <= S);
      }
    }
  }
}

TEST_CASE("forced inclusion of stale ESs precedes importance picks") {
  SchedulerConfig cfg;
  cfg.rho = 1.0;
  cfg.a_max = 2;
  cfg.staleness_bound = 2;
  Rng rng(7);
  ScheduleInput in{{2, 0, 0, 0}, {0.1, 5, 4, 3}, {1, 1, 1, 1}};
  const auto s = schedule(in, cfg, 1.0, rng);
  CHECK(s == SelectionVector({1, 1, 0, 0}));
  std::vector<ImportanceRecord> rec;
  schedule(in, cfg, 2.0, rng, &rec);
  REQUIRE(rec.size() == 4);
  CHECK(rec[1].importance == doctest::Approx(10.0));
  CHECK(rec[0].decision == 1);
}

TEST_CASE("baseline selections") {
  Rng rng(8);
  CHECK(baseline_select(SelectionMode::full, 5, 2, rng) == SelectionVector::all(5));
  CHECK(baseline_select(SelectionMode::random, 5, 5, rng) == SelectionVector::all(5));
  Rng a(99), b(99);
  const auto x = baseline_select(SelectionMode::random, 8, 3, a);
  CHECK(x == baseline_select(SelectionMode::random, 8, 3, b));
  CHECK(x.a_effective() == 3);
  const auto y = baseline_select(SelectionMode::random, 8, 3, a, {6});
  CHECK(y.pi[6] == 1);
  CHECK(y.a_effective() == 3);

  // Each ES is drawn about equally often.
  std::vector<int> hits(6, 0);
  for (int i = 0; i < 30000; ++i) {
    const auto s = baseline_select(SelectionMode::random, 6, 2, rng);
    for (int k = 0; k < 6; ++k) hits[k] += s.pi[k];
  }
  for (int h : hits) CHECK(h == doctest::Approx(10000).epsilon(0.05));
}

TEST_CASE("the threshold rule does not minimize the max-latency objective in general") {
  // ES 1 fails its own threshold, yet its latency sits under ES 0's, so
  // adding it costs nothing in the max term and gains importance.
  const std::vector<double> g{10.0, 1.0}, o{5.0, 4.0};
  const double rho = 0.5, phi = 1.0;
  const auto pass = threshold_select(g, o, rho, phi);
  CHECK(pass == SelectionVector({1, 0}));
  CHECK(objective_value(pass, g, o, rho, phi) == doctest::Approx(-5.0 + 2.5));
  CHECK(objective_value(SelectionVector({1, 1}), g, o, rho, phi) == doctest::Approx(-5.5 + 2.5));
  CHECK(objective_value(SelectionVector({1, 1}), g, o, rho, phi) < objective_value(pass, g, o, rho, phi));
}

TEST_CASE("adding a passing ES never worsens the max-latency objective") {
  Rng rng(9);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 2 + rng.index(6);
    std::vector<double> g(k), o(k);
    for (std::size_t i = 0; i < k; ++i) {
      g[i] = rng.uniform(0, 5);
      o[i] = rng.uniform(0, 5);
    }
    const double rho = rng.uniform(), phi = rng.uniform(0.1, 2);
    SelectionVector base = from_mask(static_cast<unsigned>(rng.index(1u << k)), k);
    const auto pass = threshold_select(g, o, rho, phi);
    for (std::size_t i = 0; i < k; ++i) {
      if (!pass.selected(i) || base.selected(i)) continue;
      SelectionVector more = base;
      more.pi[i] = 1;
      CHECK(objective_value(more, g, o, rho, phi) <= objective_value(base, g, o, rho, phi) + 1e-12);
    }
  }
}
