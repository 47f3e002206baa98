#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hpfl/network.hpp"
#include "hpfl/scheduler.hpp"
#include "hpfl/synthetic.hpp"

namespace hpfl {

enum class Algorithm { hpfl, hfl };
enum class AllocationMode { progressive, equal };
enum class BetaRule { fixed, inverse_lf };

struct ScenarioConfig {
  std::uint64_t seed = 1;
  int rounds = 100;
  Algorithm algorithm = Algorithm::hpfl;
  SelectionMode selection = SelectionMode::proposed;
  AllocationMode allocation = AllocationMode::progressive;
  std::string dataset_profile = "mnist";  // picks alpha/beta defaults: mnist | cifar10

  // learning
  double alpha = 0.03;
  double beta = 0.07;
  BetaRule beta_rule = BetaRule::fixed;

  // topology
  int edge_servers = 5;
  std::vector<int> ues_per_es = {4, 4, 4, 4, 4};
  double ue_distance_min_m = 2.0;
  double ue_distance_max_m = 50.0;
  double es_distance_min_m = 50.0;
  double es_distance_max_m = 200.0;
  double ue_path_gain_db = -36.0;
  double es_path_gain_db = -40.0;

  // scheduler
  double rho = 0.8;
  int a_max = 3;
  int staleness_bound = 2;
  bool force_select_stale = true;
  std::optional<double> scheduler_phi;  // overrides 5 beta S^2 / a_max

  // network
  double bandwidth_hz = 5e6;
  double b_min_hz = 1e3;
  double noise_dbm_per_hz = -174.0;
  double ue_power_w = 0.01;
  double es_power_w = 0.01;
  double cycles_per_bit = 20.0;
  double cpu_hz = 2e9;
  double payload_bits = 2544320.0;  // 79510 float32 parameters
  double es_payload_fraction = 1.0;
  double bits_per_sample = 6272.0;  // one 28x28 8-bit image
  std::optional<double> ue_tier_share;

  SyntheticTaskConfig task;

  // audit
  bool audit_enabled = true;
  int probe_count = 4;
  double probe_radius = 1.0;
  int hessian_directions = 6;

  // execution
  bool parallel = true;
  bool measure_runtime = false;

  bool operator==(const ScenarioConfig&) const = default;

  // Throws ConfigError naming the first invalid field.
  void validate() const;
  TopologyConfig topology() const;
  SchedulerConfig scheduler() const;
};

// Missing keys take their defaults; unknown keys and bad values raise ConfigError.
ScenarioConfig scenario_from_json_text(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);
std::string scenario_to_json_text(const ScenarioConfig& cfg);
void save_scenario(const ScenarioConfig& cfg, const std::string& path);

// FNV-1a 64 over the canonical JSON form.
std::uint64_t config_hash(const ScenarioConfig& cfg);

std::string to_string(Algorithm a);
std::string to_string(SelectionMode m);
std::string to_string(AllocationMode m);
Algorithm parse_algorithm(const std::string& s);
SelectionMode parse_selection(const std::string& s);
AllocationMode parse_allocation(const std::string& s);

}  // namespace hpfl
