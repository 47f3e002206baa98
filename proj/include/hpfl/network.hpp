#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "hpfl/selection.hpp"

namespace hpfl {

inline constexpr double kInfiniteLatency = std::numeric_limits<double>::infinity();

struct LinkParams {
  double power_w = 0.0;
  double gain = 0.0;
  double noise_w_per_hz = 0.0;
  double bandwidth_hz = 0.0;
};

struct ComputeParams {
  double cycles_per_unit = 0.0;
  double data_units = 0.0;
  double cpu_hz = 0.0;
};

double db_to_linear(double db);
// N0[W/Hz] = 10^((N0[dBm/Hz] - 30) / 10)
double dbm_per_hz_to_w_per_hz(double dbm_per_hz);

// c * D / delta
double tcmp(const ComputeParams& cp);
// b log2(1 + p h / (b N0)); zero when b or h is zero.
double uplink_rate(const LinkParams& link);
// Z / r; infinite when the rate is zero and the payload is not.
double tcom(double payload_bits, const LinkParams& link);

struct TopologyConfig {
  std::vector<int> ues_per_es;
  double ue_distance_min_m = 2.0;
  double ue_distance_max_m = 50.0;
  double es_distance_min_m = 50.0;
  double es_distance_max_m = 200.0;
  double ue_path_gain_db = -36.0;
  double es_path_gain_db = -40.0;
  double ue_power_w = 0.01;
  double es_power_w = 0.01;
  double noise_dbm_per_hz = -174.0;
  double cycles_per_bit = 20.0;
  double cpu_hz = 2e9;
  double payload_bits = 1e6;
  double es_payload_bits = 1e6;
};

// Distances drawn once per scenario; fading is redrawn per round.
struct Topology {
  TopologyConfig config;
  std::vector<std::vector<double>> ue_distance_m;
  std::vector<double> es_distance_m;
  std::vector<std::vector<double>> ue_data_bits;
  std::uint64_t seed = 0;

  std::size_t edge_count() const { return es_distance_m.size(); }
};

Topology make_topology(const TopologyConfig& cfg, std::vector<std::vector<double>> ue_data_bits, std::uint64_t seed);

struct ChannelSnapshot {
  std::vector<std::vector<LinkParams>> ue_links;  // [es][ue]
  std::vector<LinkParams> es_links;               // ES -> CS
  std::vector<std::vector<ComputeParams>> ue_compute;
  double payload_bits = 0.0;
  double es_payload_bits = 0.0;
  int round = 0;
};

// Channel gains h = o d^-2 * g with g ~ Exp(1) (Rayleigh amplitude, unit-mean
// power). Deterministic in (topology seed, round). Bandwidths start at zero.
ChannelSnapshot sample_channels(const Topology& topology, int round);

// O^k = max_i {Tcmp + Tcom} + Tcom^{k,0} under the snapshot's bandwidths.
double round_latency_es(const ChannelSnapshot& snapshot, std::size_t k);

struct LatencyBreakdown {
  std::vector<std::vector<double>> tcmp;
  std::vector<std::vector<double>> tcom_ue;
  std::vector<double> tcom_es;
  std::vector<double> round_latency_per_es;
  double round_latency = 0.0;  // max over selected ESs
};

LatencyBreakdown latency_breakdown(const ChannelSnapshot& snapshot, const SelectionVector& selection);

}  // namespace hpfl
