#include <doctest.h>

#include <limits>

#include "hpfl/error.hpp"
#include "hpfl/kernels.hpp"
#include "hpfl/synthetic.hpp"

using namespace hpfl;

namespace {

class NanLoss final : public LossHandle {
 public:
  explicit NanLoss(std::size_t d) : d_(d) {}
  std::size_t dim() const override { return d_; }
  double loss(const ParamVector&, const TaskShard&) const override { return std::numeric_limits<double>::quiet_NaN(); }
  ParamVector grad(const ParamVector& w, const TaskShard&) const override {
    return ParamVector::Constant(w.size(), std::numeric_limits<double>::quiet_NaN());
  }
  ParamVector hvp(const ParamVector& w, const TaskShard&, const ParamVector&) const override {
    return ParamVector::Zero(w.size());
  }

 private:
  std::size_t d_;
};

TaskGroups mlp_groups() {
  SyntheticTaskConfig cfg;
  cfg.model = "mlp";
  cfg.hidden = 12;
  return make_tasks(cfg, {4, 3, 5, 2}, 21);
}

}  // namespace

TEST_CASE("parallel meta-gradients are bitwise identical to the serial reference") {
  const auto groups = mlp_groups();
  const ParamVector w = initial_model(groups[0][0].loss->dim(), 5, 0.3);
  for (double alpha : {0.0, 0.03, 0.5}) {
    const auto s = compute_meta_grads(groups, {3, 0, 2}, w, alpha, ExecPolicy::serial);
    const auto p = compute_meta_grads(groups, {3, 0, 2}, w, alpha, ExecPolicy::parallel);
    REQUIRE(s.size() == 3);
    CHECK(s[0].size() == 2);
    CHECK(s[1].size() == 4);
    for (std::size_t k = 0; k < s.size(); ++k)
      for (std::size_t i = 0; i < s[k].size(); ++i) CHECK(s[k][i] == p[k][i]);
    const UeTask& t = groups[2][4];
    CHECK(s[2][4] == meta_grad(*t.loss, w, t.train, alpha));
  }
}

TEST_CASE("parallel evaluation is bitwise identical to the serial reference") {
  const auto groups = mlp_groups();
  const ParamVector w = initial_model(groups[0][0].loss->dim(), 6, 0.3);
  const auto s = evaluate(groups, w, 0.03, 0.03, ExecPolicy::serial);
  const auto p = evaluate(groups, w, 0.03, 0.03, ExecPolicy::parallel);
  CHECK(s.train_loss == p.train_loss);
  CHECK(s.accuracy == p.accuracy);
  CHECK(s.has_accuracy);
  CHECK(global_meta_grad(groups, w, 0.03, ExecPolicy::serial) ==
        global_meta_grad(groups, w, 0.03, ExecPolicy::parallel));
}

TEST_CASE("evaluation weights edge servers equally") {
  const auto groups = mlp_groups();
  const ParamVector w = initial_model(groups[0][0].loss->dim(), 7, 0.3);
  const auto ev = evaluate(groups, w, 0.03, 0.0, ExecPolicy::serial);
  double want = 0.0;
  for (const auto& es : groups) {
    double m = 0.0;
    for (const auto& u : es) m += meta_loss(*u.loss, w, u.train, 0.03);
    want += m / static_cast<double>(es.size());
  }
  CHECK(ev.train_loss == doctest::Approx(want / 4.0).epsilon(1e-14));
}

TEST_CASE("quadratic tasks report no accuracy") {
  SyntheticTaskConfig cfg;
  cfg.family = "quadratic";
  const auto groups = make_tasks(cfg, {2, 2}, 3);
  const auto ev = evaluate(groups, initial_model(model_dim(cfg), 1), 0.03, 0.03, ExecPolicy::parallel);
  CHECK_FALSE(ev.has_accuracy);
}

TEST_CASE("non-finite gradients are reported with the failing edge server and UE") {
  auto groups = mlp_groups();
  const std::size_t d = groups[0][0].loss->dim();
  groups[2][1].loss = std::make_shared<NanLoss>(d);
  const ParamVector w = initial_model(d, 8, 0.3);
  for (auto policy : {ExecPolicy::serial, ExecPolicy::parallel}) {
    try {
      compute_meta_grads(groups, {0, 1, 2, 3}, w, 0.03, policy);
      FAIL("expected a numerical error");
    } catch (const NumericalError& e) {
      CHECK(e.es() == 2);
      CHECK(e.ue() == 1);
    }
  }
}
