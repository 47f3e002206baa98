#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "hpfl/error.hpp"
#include "hpfl/hierarchy.hpp"
#include "hpfl/rng.hpp"
#include "hpfl/synthetic.hpp"

using namespace hpfl;
using hp = boost::multiprecision::cpp_bin_float_50;

namespace {

ParamVector vec(std::initializer_list<double> xs) {
  ParamVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

ParamVector random_vec(Rng& rng, Eigen::Index n) {
  ParamVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal() * std::pow(10.0, rng.uniform(-3, 3));
  return v;
}

HierarchyState with_cached(const std::vector<std::vector<ParamVector>>& grads, const ParamVector& w) {
  std::vector<int> n;
  for (const auto& g : grads) n.push_back(static_cast<int>(g.size()));
  HierarchyState s = make_hierarchy(w, n);
  for (std::size_t k = 0; k < grads.size(); ++k) {
    s.edges[k].cached_meta_grads = grads[k];
    s.edges[k].cache_valid = true;
  }
  return s;
}

}  // namespace

TEST_CASE("edge aggregation is the arithmetic mean") {
  const ParamVector m = edge_aggregate({vec({1, 1}), vec({3, 3})});
  CHECK(m == vec({2, 2}));
  const ParamVector x = vec({0.1, -7, 3});
  CHECK(edge_aggregate({x, x, x, x}) == x);
  CHECK_THROWS(edge_aggregate({}));
  CHECK_THROWS(edge_aggregate({vec({1}), vec({1, 2})}));
}

TEST_CASE("edge aggregation matches an extended-precision mean") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ParamVector> xs;
    for (int i = 0; i < 5; ++i) xs.push_back(random_vec(rng, 6));
    const ParamVector got = edge_aggregate(xs);
    for (Eigen::Index j = 0; j < 6; ++j) {
      hp sum = 0;
      for (const auto& x : xs) sum += hp(x[j]);
      const double want = static_cast<double>(sum / 5);
      CHECK(std::abs(got[j] - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("global update") {
  const ParamVector w = vec({1, -2});
  const ParamVector z = ParamVector::Zero(2);
  auto s = with_cached({{z, z}, {z}}, w);
  CHECK(global_update(s, SelectionVector({1, 1}), 0.1) == w);

  const ParamVector g1 = vec({0.5, 1.5}), g2 = vec({1.5, 0.5});
  s = with_cached({{g1, g2}, {vec({9, 9})}}, w);
  const ParamVector got = global_update(s, SelectionVector({1, 0}), 0.2);
  CHECK(got[0] == doctest::Approx(1 - 0.2 * 1.0));
  CHECK(got[1] == doctest::Approx(-2 - 0.2 * 1.0));

  CHECK_THROWS(global_update(s, SelectionVector({0, 0}), 0.2));
  auto empty = make_hierarchy(w, {1, 1});
  CHECK_THROWS(global_update(empty, SelectionVector({1, 0}), 0.2));
}

TEST_CASE("global update matches a hand-rolled double sum") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<ParamVector>> grads(3);
    for (auto& es : grads)
      for (std::size_t i = 0, n = 1 + rng.index(4); i < n; ++i) es.push_back(random_vec(rng, 4));
    const ParamVector w = random_vec(rng, 4);
    const auto s = with_cached(grads, w);
    SelectionVector sel = SelectionVector::none(3);
    for (std::size_t k : rng.sample(3, 2)) sel.pi[k] = 1;
    const double beta = rng.uniform(0.01, 1);
    const ParamVector got = global_update(s, sel, beta);
    for (Eigen::Index j = 0; j < 4; ++j) {
      hp total = 0;
      for (std::size_t k = 0; k < 3; ++k) {
        if (!sel.selected(k)) continue;
        hp inner = 0;
        for (const auto& g : grads[k]) inner += hp(g[j]);
        total += inner / hp(static_cast<double>(grads[k].size()));
      }
      const double want = static_cast<double>(hp(w[j]) - hp(beta) / 2 * total);
      CHECK(got[j] == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("staleness counters") {
  auto s = make_hierarchy(vec({0}), {1, 1});
  advance_staleness(s, SelectionVector({1, 0}), 5);
  CHECK(s.edges[0].staleness == 0);
  CHECK(s.edges[0].last_global_version == 1);
  CHECK(s.edges[1].staleness == 1);
  for (int r = 0; r < 2; ++r) advance_staleness(s, SelectionVector({1, 0}), 5);
  CHECK(s.edges[1].staleness == 3);
  CHECK(s.edges[1].last_global_version == 0);
}

TEST_CASE("exceeding the staleness bound names the edge server") {
  auto s = make_hierarchy(vec({0}), {1, 1, 1});
  advance_staleness(s, SelectionVector({1, 1, 0}), 1);
  try {
    advance_staleness(s, SelectionVector({1, 1, 0}), 1);
    FAIL("expected an overflow");
  } catch (const StalenessOverflow& e) {
    CHECK(e.es_id() == 2);
  }
  CHECK(s.edges[2].staleness == 1);
  CHECK_NOTHROW(advance_staleness(s, SelectionVector({1, 1, 0}), 1, false));
  CHECK(s.edges[2].staleness == 2);
}

TEST_CASE("unselected edge servers keep gradients from their last global version") {
  SyntheticTaskConfig cfg;
  auto tasks = make_tasks(cfg, {2, 2}, 4);
  const ParamVector w0 = initial_model(model_dim(cfg), 1, 0.1);
  auto s = make_hierarchy(w0, {2, 2});
  RoundContext ctx;
  ctx.groups = &tasks;
  ctx.alpha = 0.03;
  ctx.beta = 0.5;
  ctx.staleness_bound = 3;

  run_round(s, ctx, [](const HierarchyState&) { return SelectionVector({1, 0}); });
  const ParamVector kept = s.edges[1].mean_meta_grad();
  CHECK(s.edges[1].cache_valid);
  CHECK_FALSE(s.edges[0].cache_valid);
  const ParamVector w1 = s.global_model;

  run_round(s, ctx, [](const HierarchyState&) { return SelectionVector({0, 1}); });
  // ES 1 contributed the gradient it computed at w0.
  CHECK((s.global_model - (w1 - 0.5 * kept)).norm() == 0.0);
  // ES 0 retrained at w1 this round.
  const ParamVector want0 =
      edge_aggregate({meta_grad(*tasks[0][0].loss, w1, tasks[0][0].train, 0.03),
                      meta_grad(*tasks[0][1].loss, w1, tasks[0][1].train, 0.03)});
  CHECK((s.edges[0].mean_meta_grad() - want0).norm() == 0.0);
  CHECK(s.edges[0].last_global_version == 1);
  CHECK(s.edges[0].staleness == 1);
  CHECK(s.edges[0].grad_norm_sq == doctest::Approx(want0.squaredNorm()));
  CHECK((s.edges[0].edge_model - (w1 - 0.5 * want0)).norm() <= 1e-15 * w1.norm() + 1e-15);
}

TEST_CASE("a single edge server with a single UE is plain personalized gradient descent") {
  SyntheticTaskConfig cfg;
  cfg.model = "mlp";
  auto tasks = make_tasks(cfg, {1}, 6);
  ParamVector w = initial_model(model_dim(cfg), 2, 0.2);
  auto s = make_hierarchy(w, {1});
  RoundContext ctx;
  ctx.groups = &tasks;
  ctx.alpha = 0.03;
  ctx.beta = 0.07;
  ctx.staleness_bound = 0;
  for (int t = 0; t < 20; ++t) {
    run_round(s, ctx, [](const HierarchyState&) { return SelectionVector({1}); });
    w = local_update(*tasks[0][0].loss, w, tasks[0][0].train, 0.03, 0.07);
    CHECK((s.global_model - w).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("selecting every ES every round is synchronous hierarchical descent") {
  SyntheticTaskConfig cfg;
  auto tasks = make_tasks(cfg, {2, 3, 1}, 8);
  ParamVector w = initial_model(model_dim(cfg), 3, 0.1);
  auto s = make_hierarchy(w, {2, 3, 1});
  RoundContext ctx;
  ctx.groups = &tasks;
  ctx.alpha = 0.03;
  ctx.beta = 0.2;
  for (int t = 0; t < 5; ++t) {
    run_round(s, ctx, [](const HierarchyState& st) { return SelectionVector::all(st.edges.size()); });
    ParamVector step = ParamVector::Zero(w.size());
    for (const auto& es : tasks) {
      ParamVector m = ParamVector::Zero(w.size());
      for (const auto& u : es) m += meta_grad(*u.loss, w, u.train, 0.03);
      step += m / static_cast<double>(es.size());
    }
    w = w - 0.2 / 3.0 * step;
    CHECK((s.global_model - w).cwiseAbs().maxCoeff() <= 1e-12);
    for (const auto& e : s.edges) CHECK(e.staleness == 0);
  }
}

TEST_CASE("serial and parallel rounds agree bit for bit") {
  SyntheticTaskConfig cfg;
  cfg.model = "mlp";
  auto tasks = make_tasks(cfg, {3, 3, 2}, 10);
  const ParamVector w0 = initial_model(model_dim(cfg), 4, 0.1);
  auto a = make_hierarchy(w0, {3, 3, 2});
  auto b = a;
  RoundContext ctx;
  ctx.groups = &tasks;
  ctx.alpha = 0.03;
  ctx.beta = 0.1;
  ctx.staleness_bound = 2;
  RoundContext par = ctx;
  par.policy = ExecPolicy::parallel;
  const std::vector<SelectionVector> pattern{SelectionVector({1, 0, 1}), SelectionVector({0, 1, 0}),
                                             SelectionVector({1, 1, 0})};
  for (int t = 0; t < 6; ++t) {
    auto pick = [&](const HierarchyState&) { return pattern[t % 3]; };
    run_round(a, ctx, pick);
    run_round(b, par, pick);
    CHECK(a.global_model == b.global_model);
  }
}
