#pragma once

#include <string>
#include <vector>

#include "hpfl/experiment.hpp"
#include "hpfl/scenario.hpp"

namespace hpfl {

inline constexpr const char* kVersion = "0.1.0";

// round,loss,acc,latency,importance,A_eff,runtime_us,bound_rhs
std::string rounds_csv(const std::vector<RoundReport>& reports);
void write_rounds_csv(const std::vector<RoundReport>& reports, const std::string& path);

struct ManifestExtras {
  double beta = 0.0;
  double scheduler_phi = 0.0;
  std::optional<SmoothnessConstants> constants;
  int rounds_completed = 0;
  std::string command;
};

std::string manifest_json(const ScenarioConfig& cfg, const ManifestExtras& extras);
void write_manifest(const ScenarioConfig& cfg, const ManifestExtras& extras, const std::string& path);

std::string hex64(std::uint64_t v);

}  // namespace hpfl
