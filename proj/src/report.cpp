#include "hpfl/report.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace hpfl {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string rounds_csv(const std::vector<RoundReport>& reports) {
  std::string s = "round,loss,acc,latency,importance,A_eff,runtime_us,bound_rhs\n";
  for (const auto& r : reports) {
    s += std::to_string(r.round) + ',' + num(r.loss) + ',' + num(r.accuracy) + ',' + num(r.latency) + ',' +
         num(r.importance) + ',' + std::to_string(r.a_eff) + ',' + num(r.runtime_us) + ',' + num(r.bound_rhs) + '\n';
  }
  return s;
}

void write_rounds_csv(const std::vector<RoundReport>& reports, const std::string& path) {
  write_file(path, rounds_csv(reports));
}

std::string manifest_json(const ScenarioConfig& cfg, const ManifestExtras& extras) {
  using nlohmann::json;
  json j;
  j["config_hash"] = hex64(config_hash(cfg));
  j["seed"] = cfg.seed;
  j["versions"] = {{"hpfl", kVersion}, {"compiler", __VERSION__}, {"cxx_standard", __cplusplus}};
  j["command"] = extras.command;
  j["rounds_completed"] = extras.rounds_completed;
  j["effective"] = {{"beta", extras.beta}, {"scheduler_phi", extras.scheduler_phi}};
  if (extras.constants) {
    const auto& c = *extras.constants;
    j["audit_constants"] = {{"L", c.L},         {"C", c.C},     {"rho_h", c.rho_h},          {"gamma_g", c.gamma_g},
                            {"gamma_h", c.gamma_h}, {"l_f", c.l_f}, {"gamma_f_sq", c.gamma_f_sq}};
  } else {
    j["audit_constants"] = nullptr;
  }
  j["scenario"] = json::parse(scenario_to_json_text(cfg));
  return j.dump(2) + "\n";
}

void write_manifest(const ScenarioConfig& cfg, const ManifestExtras& extras, const std::string& path) {
  write_file(path, manifest_json(cfg, extras));
}

}  // namespace hpfl
