#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hpfl/loss.hpp"
#include "hpfl/param.hpp"

namespace hpfl {

// A UE's learning task: its loss handle plus training and held-out shards.
struct UeTask {
  std::shared_ptr<const LossHandle> loss;
  TaskShard train;
  TaskShard test;
};

// UE tasks grouped by edge server.
using TaskGroups = std::vector<std::vector<UeTask>>;

// F(w) = f(w - alpha * grad f(w)), the loss after one personalization step.
double meta_loss(const LossHandle& loss, const ParamVector& w, const TaskShard& shard, double alpha);

// grad F(w) = (I - alpha H(w)) grad f(w - alpha grad f(w)), with the Hessian
// applied through a Hessian-vector product.
ParamVector meta_grad(const LossHandle& loss, const ParamVector& w, const TaskShard& shard, double alpha);

struct MetaEvaluation {
  double value;      // F(w)
  ParamVector grad;  // grad F(w)
  ParamVector adapted;  // w - alpha grad f(w)
};

// Value and gradient of F in one pass (shares the inner gradient).
MetaEvaluation meta_evaluate(const LossHandle& loss, const ParamVector& w, const TaskShard& shard, double alpha);

// One full-batch personalized step: w - beta * grad F(w).
ParamVector local_update(const LossHandle& loss, const ParamVector& w_global, const TaskShard& shard, double alpha,
                         double beta);

struct SmoothnessConstants {
  double L = 0.0;        // gradient Lipschitz
  double C = 0.0;        // gradient norm bound
  double rho_h = 0.0;    // Hessian Lipschitz
  double gamma_g = 0.0;  // gradient diversity
  double gamma_h = 0.0;  // Hessian diversity
  double l_f = 0.0;      // smoothness of F
  double gamma_f_sq = 0.0;  // diversity of grad F

  // Fills l_f and gamma_f_sq from the five estimated inputs.
  void derive(double alpha);
};

double meta_smoothness(double L, double alpha, double rho_h, double C);
double meta_diversity_sq(double C, double alpha, double gamma_g, double gamma_h);

struct ProbeOptions {
  ParamVector center;
  double radius = 1.0;
  int probe_count = 4;
  // Random unit directions used to sample Hessian operator norms.
  int hessian_directions = 6;
  std::uint64_t seed = 0;
};

// Sampling-based estimates of the smoothness and diversity constants over a
// ball around `center`. Every estimate is a sampled maximum and therefore a
// lower bound on the true supremum.
SmoothnessConstants estimate_constants(const TaskGroups& groups, double alpha, const ProbeOptions& options);

struct LossBoundConstants {
  double phi;
  double nu;
};

// phi = 5 beta S^2 / A,  nu = 10 beta K gF^2 / A + 5 beta S^2 K gF^2 / A.
LossBoundConstants loss_bound_constants(double beta, int S, int A, int K, double gamma_f_sq);

}  // namespace hpfl
