#include <doctest.h>

#include <cmath>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <Eigen/Eigenvalues>

#include "hpfl/error.hpp"
#include "hpfl/pfl.hpp"
#include "hpfl/rng.hpp"
#include "hpfl/synthetic.hpp"

using namespace hpfl;
using hp = boost::multiprecision::cpp_bin_float_50;

namespace {

ParamVector vec2(double a, double b) {
  ParamVector v(2);
  v << a, b;
  return v;
}

QuadraticLoss half_norm(int d) { return QuadraticLoss(Eigen::MatrixXd::Identity(d, d), ParamVector::Zero(d)); }

struct RandomQuadratic {
  Eigen::MatrixXd q;
  ParamVector a;
};

RandomQuadratic random_quadratic(Rng& rng, int d) {
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  RandomQuadratic r{m.transpose() * m / d + 0.05 * Eigen::MatrixXd::Identity(d, d), ParamVector(d)};
  for (int i = 0; i < d; ++i) r.a[i] = rng.normal();
  return r;
}

// f(theta) with theta = w - alpha Q (w - a), all in 50-digit arithmetic.
double meta_loss_hp(const RandomQuadratic& r, const ParamVector& w, double alpha) {
  const int d = static_cast<int>(w.size());
  std::vector<hp> x(d), theta(d);
  for (int i = 0; i < d; ++i) x[i] = hp(w[i]) - hp(r.a[i]);
  for (int i = 0; i < d; ++i) {
    hp qx = 0;
    for (int j = 0; j < d; ++j) qx += hp(r.q(i, j)) * x[j];
    theta[i] = x[i] - hp(alpha) * qx;  // theta - a
  }
  hp v = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) v += theta[i] * hp(r.q(i, j)) * theta[j];
  return static_cast<double>(v / 2);
}

}  // namespace

TEST_CASE("meta loss on the half squared norm") {
  const auto f = half_norm(2);
  TaskShard s;
  CHECK(meta_loss(f, vec2(2, 0), s, 0.0) == doctest::Approx(2.0));
  CHECK(meta_loss(f, vec2(2, 0), s, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("meta loss on random quadratics matches extended precision") {
  Rng rng(21);
  TaskShard s;
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = random_quadratic(rng, 3);
    QuadraticLoss f(r.q, r.a);
    ParamVector w(3);
    for (int i = 0; i < 3; ++i) w[i] = rng.normal();
    const double alpha = rng.uniform(0.0, 0.5);
    const double want = meta_loss_hp(r, w, alpha);
    CHECK(meta_loss(f, w, s, alpha) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("meta gradient special cases") {
  const auto f = half_norm(2);
  TaskShard s;
  const ParamVector g = meta_grad(f, vec2(2, 0), s, 0.5);
  CHECK(g[0] == doctest::Approx(0.5));
  CHECK(g[1] == doctest::Approx(0.0));

  SyntheticTaskConfig cfg;
  cfg.model = "mlp";
  auto tasks = make_tasks(cfg, {1}, 3);
  const auto& t = tasks[0][0];
  const ParamVector w = initial_model(model_dim(cfg), 4, 0.3);
  const ParamVector plain = t.loss->grad(w, t.train);
  const ParamVector meta = meta_grad(*t.loss, w, t.train, 0.0);
  CHECK((plain - meta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("meta gradient on quadratics equals (I - aQ) Q (I - aQ) (w - a)") {
  Rng rng(8);
  TaskShard s;
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 4;
    const auto r = random_quadratic(rng, d);
    QuadraticLoss f(r.q, r.a);
    ParamVector w(d);
    for (int i = 0; i < d; ++i) w[i] = rng.normal();
    const double alpha = rng.uniform(0.0, 0.3);
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d) - alpha * r.q;
    const ParamVector want = m * r.q * m * (w - r.a);
    const ParamVector got = meta_grad(f, w, s, alpha);
    CHECK((got - want).norm() <= 1e-10 * std::max(1.0, want.norm()));
  }
}

TEST_CASE("meta gradient of the perceptron matches differenced meta loss") {
  SyntheticTaskConfig cfg;
  cfg.model = "mlp";
  cfg.features = 4;
  cfg.hidden = 4;
  cfg.classes = 3;
  cfg.samples_min = cfg.samples_max = 10;
  auto tasks = make_tasks(cfg, {2}, 12);
  Rng rng(13);
  for (const auto& t : tasks[0]) {
    const ParamVector w = initial_model(model_dim(cfg), rng.next(), 0.5);
    const double alpha = 0.02;
    const ParamVector g = meta_grad(*t.loss, w, t.train, alpha);
    ParamVector fd(w.size());
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      ParamVector a = w, b = w;
      a[i] += h;
      b[i] -= h;
      fd[i] = (meta_loss(*t.loss, a, t.train, alpha) - meta_loss(*t.loss, b, t.train, alpha)) / (2 * h);
    }
    CHECK((g - fd).norm() / std::max(1.0, g.norm()) <= 1e-4);
  }
}

TEST_CASE("local update") {
  const auto f = half_norm(2);
  TaskShard s;
  const ParamVector w = local_update(f, vec2(2, 0), s, 0.5, 1.0);
  CHECK(w[0] == doctest::Approx(1.5));
  CHECK(w[1] == doctest::Approx(0.0));
  const ParamVector still = local_update(f, vec2(0, 0), s, 0.5, 1.0);
  CHECK(still.norm() == 0.0);
  CHECK_THROWS_AS(local_update(f, vec2(1, 1), s, 0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(meta_loss(f, vec2(1, 1), s, -0.1), std::invalid_argument);
}

TEST_CASE("one step with beta <= 1/L_F decreases the quadratic meta loss") {
  Rng rng(31);
  TaskShard s;
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = random_quadratic(rng, 4);
    QuadraticLoss f(r.q, r.a);
    const double alpha = 0.1;
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(4, 4) - alpha * r.q;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m * r.q * m);
    const double l_f = es.eigenvalues().maxCoeff();
    ParamVector w(4);
    for (int i = 0; i < 4; ++i) w[i] = r.a[i] + rng.normal();
    const ParamVector next = local_update(f, w, s, alpha, 1.0 / l_f);
    CHECK(meta_loss(f, next, s, alpha) < meta_loss(f, w, s, alpha));
  }
}

TEST_CASE("non-finite values raise a numerical error") {
  const auto f = half_norm(2);
  TaskShard s;
  CHECK_THROWS_AS(meta_grad(f, vec2(std::nan(""), 0), s, 0.1), NumericalError);
  CHECK_THROWS_AS(meta_loss(f, vec2(1e200, 1e200), s, 0.0), NumericalError);
}

TEST_CASE("derived smoothness constants") {
  SmoothnessConstants c;
  c.L = 1;
  c.C = 2;
  c.rho_h = 1;
  c.gamma_g = 0.5;
  c.gamma_h = 0.2;
  c.derive(0.1);
  CHECK(c.l_f == doctest::Approx(4.2).epsilon(1e-15));
  const hp want = hp(3) * hp(4) * hp("0.01") * hp("0.04") + hp(192) * hp("0.25");
  CHECK(c.gamma_f_sq == doctest::Approx(static_cast<double>(want)).epsilon(1e-15));
  CHECK(c.gamma_f_sq == doctest::Approx(48.0048).epsilon(1e-15));
}

TEST_CASE("constant estimation on identical unit bowls") {
  TaskGroups groups(1);
  UeTask t;
  t.loss = std::make_shared<QuadraticLoss>(half_norm(3));
  groups[0] = {t, t, t};
  ProbeOptions o;
  o.center = ParamVector::Zero(3);
  o.probe_count = 6;
  o.seed = 1;
  const auto c = estimate_constants(groups, 0.1, o);
  CHECK(c.L == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.rho_h == doctest::Approx(0.0));
  CHECK(c.gamma_g == doctest::Approx(0.0));
  CHECK(c.gamma_h == doctest::Approx(0.0));
  CHECK(c.C <= 1.0 + 1e-12);
  CHECK(c.l_f == doctest::Approx(meta_smoothness(c.L, 0.1, c.rho_h, c.C)));

  o.probe_count = 1;
  CHECK_THROWS(estimate_constants(groups, 0.1, o));
  o.probe_count = 3;
  o.radius = 0.0;
  CHECK_THROWS(estimate_constants(groups, 0.1, o));
}

TEST_CASE("constant estimation is deterministic in its seed") {
  SyntheticTaskConfig cfg;
  auto groups = make_tasks(cfg, {2, 2}, 5);
  ProbeOptions o;
  o.center = initial_model(model_dim(cfg), 1);
  o.seed = 77;
  const auto a = estimate_constants(groups, 0.03, o);
  const auto b = estimate_constants(groups, 0.03, o);
  CHECK(a.L == b.L);
  CHECK(a.gamma_f_sq == b.gamma_f_sq);
  CHECK(a.gamma_g > 0.0);
}

TEST_CASE("loss-drop bound constants") {
  const auto t = loss_bound_constants(0.1, 2, 5, 10, 1.0);
  CHECK(t.phi == doctest::Approx(0.4));
  CHECK(t.nu == doctest::Approx(6.0));
  const auto z = loss_bound_constants(0.1, 0, 5, 10, 1.0);
  CHECK(z.phi == 0.0);
  CHECK(z.nu == doctest::Approx(10 * 0.1 * 10 / 5.0));
  CHECK_THROWS(loss_bound_constants(0.1, 2, 0, 10, 1.0));
}
