#pragma once

#include <vector>

#include "hpfl/rng.hpp"
#include "hpfl/selection.hpp"

namespace hpfl {

enum class SelectionMode { proposed, full, random };

struct SchedulerConfig {
  double rho = 0.8;
  int a_max = 3;
  int staleness_bound = 2;
  SelectionMode mode = SelectionMode::proposed;
  bool force_select_stale = true;
};

struct ImportanceRecord {
  int es_id = 0;
  double importance = 0.0;  // phi * grad_norm_sq
  double latency = 0.0;     // O_k
  int decision = 0;
};

// Per-round scheduler input, one entry per ES.
struct ScheduleInput {
  std::vector<int> staleness;
  std::vector<double> grad_norm_sq;
  std::vector<double> latency;
};

// rho * phi * I - (1 - rho) * O, with each term dropped when its weight is zero.
double selection_score(double rho, double phi, double grad_norm_sq, double latency);

// Edge servers that must be selected now so that no ES can exceed the bound in
// a later round with at most a_max picks per round: the m most stale ESs,
// m = max_j (#{tau >= S - j} - a_max * j).
std::vector<int> mandatory_set(const std::vector<int>& staleness, int bound, int a_max);

// Threshold rule alone: pi_k = 1 iff the score is non-negative.
SelectionVector threshold_select(const std::vector<double>& grad_norm_sq, const std::vector<double>& latency,
                                 double rho, double phi);

// Full per-round decision for the configured mode. `rng` is used only by the
// random baseline.
SelectionVector schedule(const ScheduleInput& in, const SchedulerConfig& cfg, double phi, Rng& rng,
                         std::vector<ImportanceRecord>* records = nullptr);

// -rho phi sum pi I + (1 - rho) max pi O; zero for the empty selection.
double objective_value(const SelectionVector& sel, const std::vector<double>& grad_norm_sq,
                       const std::vector<double>& latency, double rho, double phi);

// sum pi (-rho phi I + (1 - rho) O): the per-ES separable form the threshold
// rule minimizes term by term.
double separable_objective(const SelectionVector& sel, const std::vector<double>& grad_norm_sq,
                           const std::vector<double>& latency, double rho, double phi);

// full: all ones. random: `mandatory` plus a uniform fill up to a_max.
SelectionVector baseline_select(SelectionMode mode, int k, int a_max, Rng& rng,
                                const std::vector<int>& mandatory = {});

}  // namespace hpfl
