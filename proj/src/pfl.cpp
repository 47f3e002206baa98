#include "hpfl/pfl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hpfl/error.hpp"
#include "hpfl/rng.hpp"

namespace hpfl {

namespace {

void require_alpha(double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
}

void require_finite(const ParamVector& v, const char* what) {
  if (!all_finite(v)) throw NumericalError(std::string("non-finite ") + what);
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string("non-finite ") + what);
}

}  // namespace

MetaEvaluation meta_evaluate(const LossHandle& loss, const ParamVector& w, const TaskShard& shard, double alpha) {
  require_alpha(alpha);
  const ParamVector g = loss.grad(w, shard);
  require_finite(g, "gradient");
  if (alpha == 0.0) {
    const double value = loss.loss(w, shard);
    require_finite(value, "loss");
    return {value, g, w};
  }
  ParamVector adapted = w - alpha * g;
  const double value = loss.loss(adapted, shard);
  require_finite(value, "meta loss");
  const ParamVector g_adapted = loss.grad(adapted, shard);
  require_finite(g_adapted, "adapted gradient");
  ParamVector out = g_adapted - alpha * loss.hvp(w, shard, g_adapted);
  require_finite(out, "meta gradient");
  return {value, std::move(out), std::move(adapted)};
}

double meta_loss(const LossHandle& loss, const ParamVector& w, const TaskShard& shard, double alpha) {
  require_alpha(alpha);
  if (alpha == 0.0) {
    const double value = loss.loss(w, shard);
    require_finite(value, "loss");
    return value;
  }
  const ParamVector g = loss.grad(w, shard);
  require_finite(g, "gradient");
  const double value = loss.loss(w - alpha * g, shard);
  require_finite(value, "meta loss");
  return value;
}

ParamVector meta_grad(const LossHandle& loss, const ParamVector& w, const TaskShard& shard, double alpha) {
  return meta_evaluate(loss, w, shard, alpha).grad;
}

ParamVector local_update(const LossHandle& loss, const ParamVector& w_global, const TaskShard& shard, double alpha,
                         double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  ParamVector out = w_global - beta * meta_grad(loss, w_global, shard, alpha);
  require_finite(out, "local model");
  return out;
}

double meta_smoothness(double L, double alpha, double rho_h, double C) { return 4.0 * L + alpha * rho_h * C; }

double meta_diversity_sq(double C, double alpha, double gamma_g, double gamma_h) {
  return 3.0 * C * C * alpha * alpha * gamma_h * gamma_h + 192.0 * gamma_g * gamma_g;
}

void SmoothnessConstants::derive(double alpha) {
  l_f = meta_smoothness(L, alpha, rho_h, C);
  gamma_f_sq = meta_diversity_sq(C, alpha, gamma_g, gamma_h);
}

SmoothnessConstants estimate_constants(const TaskGroups& groups, double alpha, const ProbeOptions& options) {
  if (options.probe_count < 2) throw std::invalid_argument("estimate_constants: probe_count must be >= 2");
  if (options.hessian_directions < 1) throw std::invalid_argument("estimate_constants: need >= 1 Hessian direction");
  std::vector<const UeTask*> tasks;
  std::vector<double> weights;  // 1 / (K n_k)
  int non_empty = 0;
  for (const auto& g : groups) non_empty += g.empty() ? 0 : 1;
  if (non_empty == 0) throw std::invalid_argument("estimate_constants: no tasks");
  for (const auto& g : groups) {
    for (const auto& t : g) {
      tasks.push_back(&t);
      weights.push_back(1.0 / (static_cast<double>(non_empty) * static_cast<double>(g.size())));
    }
  }
  const Eigen::Index dim = options.center.size();
  const auto P = static_cast<std::size_t>(options.probe_count);
  const auto R = static_cast<std::size_t>(options.hessian_directions);
  const std::size_t T = tasks.size();

  Rng rng(derive_seed(options.seed, {0x5eed'c0de}));
  std::vector<ParamVector> probes(P);
  for (auto& p : probes) {
    ParamVector u(dim);
    for (Eigen::Index i = 0; i < dim; ++i) u[i] = rng.normal();
    const double radial = std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
    p = options.center + options.radius * radial * u.normalized();
  }
  std::vector<ParamVector> dirs(R);
  for (auto& d : dirs) {
    d.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) d[i] = rng.normal();
    d.normalize();
  }

  // grads[t][p], hv[t][p][r] = H_t(w_p) d_r
  std::vector<std::vector<ParamVector>> grads(T, std::vector<ParamVector>(P));
  std::vector<std::vector<std::vector<ParamVector>>> hv(T, std::vector<std::vector<ParamVector>>(P, std::vector<ParamVector>(R)));
  for (std::size_t t = 0; t < T; ++t) {
    const auto& task = *tasks[t];
    for (std::size_t p = 0; p < P; ++p) {
      grads[t][p] = task.loss->grad(probes[p], task.train);
      for (std::size_t r = 0; r < R; ++r) hv[t][p][r] = task.loss->hvp(probes[p], task.train, dirs[r]);
    }
  }

  SmoothnessConstants out;
  bool any_pair = false;
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t q = p + 1; q < P; ++q) {
      const double dist = (probes[p] - probes[q]).norm();
      if (!(dist > 0.0)) continue;
      any_pair = true;
      for (std::size_t t = 0; t < T; ++t) {
        out.L = std::max(out.L, (grads[t][p] - grads[t][q]).norm() / dist);
        for (std::size_t r = 0; r < R; ++r)
          out.rho_h = std::max(out.rho_h, (hv[t][p][r] - hv[t][q][r]).norm() / dist);
      }
    }
  }
  if (!any_pair) throw std::invalid_argument("estimate_constants: degenerate probes (all pairs identical)");

  double gamma_g_sq = 0.0;
  double gamma_h_sq = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    ParamVector mean_g = ParamVector::Zero(dim);
    for (std::size_t t = 0; t < T; ++t) {
      out.C = std::max(out.C, grads[t][p].norm());
      mean_g += weights[t] * grads[t][p];
    }
    double spread_g = 0.0;
    for (std::size_t t = 0; t < T; ++t) spread_g += weights[t] * (grads[t][p] - mean_g).squaredNorm();
    gamma_g_sq = std::max(gamma_g_sq, spread_g);

    std::vector<ParamVector> mean_hv(R, ParamVector::Zero(dim));
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t t = 0; t < T; ++t) mean_hv[r] += weights[t] * hv[t][p][r];
    double spread_h = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      double op = 0.0;
      for (std::size_t r = 0; r < R; ++r) op = std::max(op, (hv[t][p][r] - mean_hv[r]).norm());
      spread_h += weights[t] * op * op;
    }
    gamma_h_sq = std::max(gamma_h_sq, spread_h);
  }
  out.gamma_g = std::sqrt(gamma_g_sq);
  out.gamma_h = std::sqrt(gamma_h_sq);
  out.derive(alpha);
  return out;
}

LossBoundConstants loss_bound_constants(double beta, int S, int A, int K, double gamma_f_sq) {
  if (A < 1) throw std::invalid_argument("loss_bound_constants: A must be >= 1");
  if (S < 0) throw std::invalid_argument("loss_bound_constants: S must be >= 0");
  const double a = static_cast<double>(A);
  const double s2 = static_cast<double>(S) * static_cast<double>(S);
  const double k = static_cast<double>(K);
  return {5.0 * beta * s2 / a, 10.0 * beta * k * gamma_f_sq / a + 5.0 * beta * s2 * k * gamma_f_sq / a};
}

}  // namespace hpfl
