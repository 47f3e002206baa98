#pragma once

#include <optional>
#include <vector>

#include "hpfl/network.hpp"
#include "hpfl/selection.hpp"

namespace hpfl {

struct UeLinkSpec {
  double power_w = 0.0;
  double gain = 0.0;
  double tcmp_s = 0.0;
};

struct EdgePath {
  int es_id = 0;
  std::vector<UeLinkSpec> ues;
  double es_power_w = 0.0;
  double es_gain = 0.0;
};

// Min-max latency bandwidth problem over the selected edge servers.
struct AllocationProblem {
  std::vector<EdgePath> edges;
  double total_bandwidth_hz = 5e6;
  double payload_bits = 1e6;     // UE -> ES
  double es_payload_bits = 1e6;  // ES -> CS; zero means no cloud hop
  double noise_w_per_hz = 0.0;
  double b_min_hz = 1e3;

  void validate() const;
};

struct AllocationResult {
  std::vector<std::vector<double>> b_ue;  // [edge][ue], edges in problem order
  std::vector<double> b_es;
  std::vector<double> ue_tier_time;  // G_k: common UE finishing time per edge
  std::vector<double> es_latency;    // O_k recomputed from the allocation
  double achieved_latency = 0.0;     // max_k O_k
  double used_bandwidth_hz = 0.0;
};

AllocationProblem make_allocation_problem(const ChannelSnapshot& snapshot, const SelectionVector& selection,
                                          double total_bandwidth_hz, double b_min_hz);

// Writes the allocation into the snapshot; unselected links get zero bandwidth.
void apply_allocation(ChannelSnapshot& snapshot, const AllocationProblem& problem, const AllocationResult& result);

// Bandwidth b with payload / r(b) == time, from the Lambert-W closed form on
// the non-trivial lower branch. Returns NaN when no finite bandwidth reaches
// the target (rate ceiling p h / (N0 ln 2)) or when the closed form fails its
// residual check.
double link_bandwidth_closed_form(double power_w, double gain, double noise_w_per_hz, double payload_bits,
                                  double time_s);
// Same root by bisection on the monotone rate; NaN when infeasible.
double link_bandwidth_bisection(double power_w, double gain, double noise_w_per_hz, double payload_bits,
                                double time_s);

// Per-UE bandwidths giving every UE of `edge` the finishing time g_target.
// Throws InfeasibleError naming the first UE that cannot make it.
std::vector<double> solve_ue_bandwidth(const EdgePath& edge, double g_target, double payload_bits,
                                       double noise_w_per_hz);

// Min-max allocation: every selected ES finishes at the same O*, and each
// ES's UEs finish together, with the whole budget used.
AllocationResult progressive_fill(const AllocationProblem& problem);

// Equal bandwidth per link, or, with ue_tier_share, that fraction of B split
// equally over UE links and the rest equally over ES links.
AllocationResult equal_split(const AllocationProblem& problem, std::optional<double> ue_tier_share = std::nullopt);

// Recomputes per-edge latencies for an arbitrary allocation.
std::vector<double> allocation_latencies(const AllocationProblem& problem, const std::vector<std::vector<double>>& b_ue,
                                         const std::vector<double>& b_es);

}  // namespace hpfl
