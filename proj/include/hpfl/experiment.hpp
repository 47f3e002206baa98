#pragma once

#include <optional>
#include <vector>

#include "hpfl/hierarchy.hpp"
#include "hpfl/network.hpp"
#include "hpfl/pfl.hpp"
#include "hpfl/scenario.hpp"

namespace hpfl {

struct RoundReport {
  int round = 0;
  double loss = 0.0;        // global training objective after the round's update
  double accuracy = 0.0;    // mean personalized held-out accuracy
  double latency = 0.0;     // realized O_t
  double importance = 0.0;  // sum over selected ESs of phi * cached grad_norm_sq
  int a_eff = 0;
  double runtime_us = 0.0;  // scheduler + allocator wall time, 0 unless measured
  double bound_rhs = 0.0;   // loss-drop bound for this round; NaN when auditing is off
  SelectionVector selection;
  std::vector<int> staleness;  // after the round
};

// Inputs the loss-drop audit needs for one round.
struct AuditPoint {
  double f_before = 0.0;
  double f_after = 0.0;
  std::vector<double> stale_grad_norm_sq;  // exact |grad F(w_{t - tau_k})|^2 of each selected ES
  int a_eff = 0;
};

struct AuditRow {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

// F(w_{t+1}) - F(w_t) against phi * sum |grad F(w_{t-tau})|^2 + nu, with A = A_eff.
std::vector<AuditRow> audit_loss_bound(const std::vector<AuditPoint>& trajectory, const SmoothnessConstants& constants,
                                     double beta, int S, int K);

class Simulator {
 public:
  explicit Simulator(ScenarioConfig cfg);

  // One round. `forced` bypasses the scheduler but not the allocator.
  RoundReport step(const std::optional<SelectionVector>& forced = std::nullopt);
  // Runs until cfg.rounds rounds have been executed.
  std::vector<RoundReport> run();

  const ScenarioConfig& config() const { return cfg_; }
  const HierarchyState& state() const { return state_; }
  const TaskGroups& tasks() const { return tasks_; }
  const Topology& topology() const { return topology_; }
  double beta() const { return beta_; }
  double scheduler_phi() const { return scheduler_phi_; }
  const std::optional<SmoothnessConstants>& constants() const { return constants_; }
  const std::vector<AuditPoint>& audit_trail() const { return trail_; }
  double initial_loss() const { return initial_.train_loss; }

  // Per-ES latency the scheduler sees: ESs already in `prev` are priced under
  // the allocation for `prev`, the others under the allocation for prev + {k}.
  std::vector<double> scheduling_latencies(const ChannelSnapshot& snapshot, const SelectionVector& prev) const;
  // Allocates bandwidth for `sel` and returns the realized round latency.
  double realized_latency(ChannelSnapshot& snapshot, const SelectionVector& sel) const;

 private:
  RoundContext context() const;
  double exact_grad_norm_sq(int version);

  ScenarioConfig cfg_;
  TaskGroups tasks_;
  Topology topology_;
  HierarchyState state_;
  double alpha_train_ = 0.0;
  double adapt_alpha_ = 0.0;
  double beta_ = 0.0;
  double scheduler_phi_ = 0.0;
  std::optional<SmoothnessConstants> constants_;
  std::vector<ParamVector> versions_;  // global model after each round, versions_[0] = w_0
  std::vector<std::optional<double>> version_grad_sq_;
  std::vector<AuditPoint> trail_;
  Evaluation initial_;
  Evaluation last_;
};

std::vector<RoundReport> run_experiment(const ScenarioConfig& cfg);

}  // namespace hpfl
