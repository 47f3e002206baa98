#include "hpfl/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hpfl/rng.hpp"

namespace hpfl {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double dbm_per_hz_to_w_per_hz(double dbm_per_hz) { return std::pow(10.0, (dbm_per_hz - 30.0) / 10.0); }

double tcmp(const ComputeParams& cp) { return cp.cycles_per_unit * cp.data_units / cp.cpu_hz; }

double uplink_rate(const LinkParams& link) {
  if (!(link.bandwidth_hz > 0.0) || !(link.gain > 0.0) || !(link.power_w > 0.0)) return 0.0;
  const double snr = link.power_w * link.gain / (link.bandwidth_hz * link.noise_w_per_hz);
  return link.bandwidth_hz * std::log2(1.0 + snr);
}

double tcom(double payload_bits, const LinkParams& link) {
  if (payload_bits == 0.0) return 0.0;
  const double r = uplink_rate(link);
  if (!(r > 0.0)) return kInfiniteLatency;
  return payload_bits / r;
}

Topology make_topology(const TopologyConfig& cfg, std::vector<std::vector<double>> ue_data_bits, std::uint64_t seed) {
  if (ue_data_bits.size() != cfg.ues_per_es.size()) throw std::invalid_argument("topology: data sizes do not match ES count");
  Topology topo;
  topo.config = cfg;
  topo.seed = seed;
  topo.ue_data_bits = std::move(ue_data_bits);
  Rng rng(derive_seed(seed, {0xd157}));
  for (std::size_t k = 0; k < cfg.ues_per_es.size(); ++k) {
    if (topo.ue_data_bits[k].size() != static_cast<std::size_t>(cfg.ues_per_es[k]))
      throw std::invalid_argument("topology: data sizes do not match UE count");
    topo.es_distance_m.push_back(rng.uniform(cfg.es_distance_min_m, cfg.es_distance_max_m));
    std::vector<double> d;
    for (int i = 0; i < cfg.ues_per_es[k]; ++i) d.push_back(rng.uniform(cfg.ue_distance_min_m, cfg.ue_distance_max_m));
    topo.ue_distance_m.push_back(std::move(d));
  }
  return topo;
}

ChannelSnapshot sample_channels(const Topology& topology, int round) {
  const auto& cfg = topology.config;
  const double noise = dbm_per_hz_to_w_per_hz(cfg.noise_dbm_per_hz);
  const double o_ue = db_to_linear(cfg.ue_path_gain_db);
  const double o_es = db_to_linear(cfg.es_path_gain_db);
  Rng rng(derive_seed(topology.seed, {0xfade, static_cast<std::uint64_t>(round)}));

  ChannelSnapshot snap;
  snap.round = round;
  snap.payload_bits = cfg.payload_bits;
  snap.es_payload_bits = cfg.es_payload_bits;
  const std::size_t K = topology.edge_count();
  snap.ue_links.resize(K);
  snap.ue_compute.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double d_es = topology.es_distance_m[k];
    snap.es_links.push_back({cfg.es_power_w, o_es / (d_es * d_es) * rng.exponential(), noise, 0.0});
    for (std::size_t i = 0; i < topology.ue_distance_m[k].size(); ++i) {
      const double d = topology.ue_distance_m[k][i];
      snap.ue_links[k].push_back({cfg.ue_power_w, o_ue / (d * d) * rng.exponential(), noise, 0.0});
      snap.ue_compute[k].push_back({cfg.cycles_per_bit, topology.ue_data_bits[k][i], cfg.cpu_hz});
    }
  }
  return snap;
}

double round_latency_es(const ChannelSnapshot& snapshot, std::size_t k) {
  double slowest = 0.0;
  for (std::size_t i = 0; i < snapshot.ue_links[k].size(); ++i)
    slowest = std::max(slowest, tcmp(snapshot.ue_compute[k][i]) + tcom(snapshot.payload_bits, snapshot.ue_links[k][i]));
  return slowest + tcom(snapshot.es_payload_bits, snapshot.es_links[k]);
}

LatencyBreakdown latency_breakdown(const ChannelSnapshot& snapshot, const SelectionVector& selection) {
  LatencyBreakdown out;
  const std::size_t K = snapshot.es_links.size();
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> cmp, com;
    double slowest = 0.0;
    for (std::size_t i = 0; i < snapshot.ue_links[k].size(); ++i) {
      cmp.push_back(tcmp(snapshot.ue_compute[k][i]));
      com.push_back(tcom(snapshot.payload_bits, snapshot.ue_links[k][i]));
      slowest = std::max(slowest, cmp.back() + com.back());
    }
    out.tcmp.push_back(std::move(cmp));
    out.tcom_ue.push_back(std::move(com));
    out.tcom_es.push_back(tcom(snapshot.es_payload_bits, snapshot.es_links[k]));
    out.round_latency_per_es.push_back(slowest + out.tcom_es.back());
    if (k < selection.size() && selection.selected(k))
      out.round_latency = std::max(out.round_latency, out.round_latency_per_es.back());
  }
  return out;
}

}  // namespace hpfl
