#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hpfl/error.hpp"
#include "hpfl/experiment.hpp"
#include "hpfl/report.hpp"
#include "hpfl/scenario.hpp"

namespace fs = std::filesystem;
using namespace hpfl;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> rounds;
  std::optional<std::string> mode, selection, allocation;
  std::optional<double> rho;

  void apply(ScenarioConfig& c) const {
    if (seed) c.seed = *seed;
    if (rounds) c.rounds = *rounds;
    if (mode) c.algorithm = parse_algorithm(*mode);
    if (selection) c.selection = parse_selection(*selection);
    if (allocation) c.allocation = parse_allocation(*allocation);
    if (rho) c.rho = *rho;
    c.validate();
  }
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Override the scenario seed");
  cmd->add_option("--rounds", o.rounds, "Override the number of rounds");
  cmd->add_option("--mode", o.mode, "hpfl or hfl");
  cmd->add_option("--selection", o.selection, "proposed, full or random");
  cmd->add_option("--allocation", o.allocation, "progressive or equal");
  cmd->add_option("--rho", o.rho, "Scheduler weight in [0, 1]");
}

ScenarioConfig load(const std::string& path) {
  if (path.empty()) return ScenarioConfig{};
  return load_scenario(path);
}

struct RunOutput {
  std::vector<RoundReport> reports;
  ManifestExtras extras;
  std::vector<AuditRow> audit;
};

RunOutput execute(const ScenarioConfig& cfg, const std::string& command) {
  Simulator sim(cfg);
  RunOutput out;
  out.reports = sim.run();
  out.extras.beta = sim.beta();
  out.extras.scheduler_phi = sim.scheduler_phi();
  out.extras.constants = sim.constants();
  out.extras.rounds_completed = static_cast<int>(out.reports.size());
  out.extras.command = command;
  if (sim.constants())
    out.audit = audit_loss_bound(sim.audit_trail(), *sim.constants(), sim.beta(), cfg.staleness_bound, cfg.edge_servers);
  return out;
}

void emit(const fs::path& dir, const ScenarioConfig& cfg, const RunOutput& out) {
  fs::create_directories(dir);
  write_rounds_csv(out.reports, (dir / "rounds.csv").string());
  write_manifest(cfg, out.extras, (dir / "manifest.json").string());
}

double mean_of(const std::vector<RoundReport>& r, double RoundReport::*field) {
  if (r.empty()) return std::nan("");
  double s = 0.0;
  for (const auto& x : r) s += x.*field;
  return s / static_cast<double>(r.size());
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> v;
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  try {
    if (parts.size() == 3) {
      const double lo = std::stod(parts[0]), hi = std::stod(parts[1]), step = std::stod(parts[2]);
      if (!(step > 0.0) || hi < lo) throw ConfigError("--values", "need lo:hi:step with step > 0 and hi >= lo");
      const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
      for (int i = 0; i <= n; ++i) v.push_back(lo + step * i);
    } else {
      std::stringstream cs(text);
      for (std::string p; std::getline(cs, p, ',');) v.push_back(std::stod(p));
    }
  } catch (const std::logic_error&) {
    throw ConfigError("--values", "cannot parse '" + text + "'");
  }
  if (v.empty()) throw ConfigError("--values", "no values");
  return v;
}

void set_param(ScenarioConfig& c, const std::string& name, double v) {
  if (name == "rho") c.rho = v;
  else if (name == "a_max") c.a_max = static_cast<int>(std::lround(v));
  else if (name == "heterogeneity") c.task.heterogeneity = static_cast<int>(std::lround(v));
  else if (name == "bandwidth_hz") c.bandwidth_hz = v;
  else if (name == "seed") c.seed = static_cast<std::uint64_t>(std::llround(v));
  else throw ConfigError("--param", "unsupported sweep parameter '" + name + "'");
  c.validate();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical personalized federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  Overrides ov;

  auto* run = app.add_subcommand("run", "Run one experiment and write rounds.csv and manifest.json");
  run->add_option("--config", config_path, "Scenario JSON (defaults when omitted)");
  run->add_option("--out", out_dir, "Output directory");
  add_overrides(run, ov);

  auto* audit = app.add_subcommand("audit", "Run with beta = 1/L_F and check the per-round loss-drop bound");
  audit->add_option("--config", config_path, "Scenario JSON")->required();
  audit->add_option("--out", out_dir, "Output directory")->required();
  add_overrides(audit, ov);

  std::string param = "rho", values = "0.4:0.8:0.05";
  auto* sweep = app.add_subcommand("sweep", "Repeat a run over values of one parameter");
  sweep->add_option("--config", config_path, "Scenario JSON");
  sweep->add_option("--param", param, "rho, a_max, heterogeneity, bandwidth_hz or seed");
  sweep->add_option("--values", values, "lo:hi:step or a comma list");
  sweep->add_option("--out", out_dir, "Output directory");
  add_overrides(sweep, ov);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    ScenarioConfig cfg = load(config_path);
    ov.apply(cfg);
    std::string command;
    for (int i = 1; i < argc; ++i) command += (i > 1 ? " " : "") + std::string(argv[i]);

    if (run->parsed()) {
      const RunOutput out = execute(cfg, command);
      emit(out_dir, cfg, out);
      std::cout << "wrote " << out.reports.size() << " rounds to " << (fs::path(out_dir) / "rounds.csv").string()
                << "\n";
    } else if (audit->parsed()) {
      cfg.beta_rule = BetaRule::inverse_lf;
      cfg.audit_enabled = true;
      const RunOutput out = execute(cfg, command);
      emit(out_dir, cfg, out);
      std::ofstream csv(fs::path(out_dir) / "audit.csv");
      csv << "round,lhs,rhs,holds\n";
      int held = 0;
      for (std::size_t t = 0; t < out.audit.size(); ++t) {
        csv << t << ',' << fmt(out.audit[t].lhs) << ',' << fmt(out.audit[t].rhs) << ',' << out.audit[t].holds << '\n';
        held += out.audit[t].holds ? 1 : 0;
      }
      std::cout << "bound held in " << held << "/" << out.audit.size() << " rounds (beta = " << out.extras.beta
                << ")\n";
    } else if (sweep->parsed()) {
      fs::create_directories(out_dir);
      std::ofstream summary(fs::path(out_dir) / "sweep.csv");
      summary << param << ",mean_latency,mean_importance,mean_A_eff,final_loss,final_acc\n";
      for (double v : parse_values(values)) {
        ScenarioConfig c = cfg;
        set_param(c, param, v);
        const RunOutput out = execute(c, command);
        emit(fs::path(out_dir) / (param + "=" + fmt(v)), c, out);
        std::vector<double> aeff;
        for (const auto& r : out.reports) aeff.push_back(r.a_eff);
        const double mean_aeff = aeff.empty() ? std::nan("") : std::accumulate(aeff.begin(), aeff.end(), 0.0) / aeff.size();
        summary << fmt(v) << ',' << fmt(mean_of(out.reports, &RoundReport::latency)) << ','
                << fmt(mean_of(out.reports, &RoundReport::importance)) << ',' << fmt(mean_aeff) << ','
                << fmt(out.reports.empty() ? std::nan("") : out.reports.back().loss) << ','
                << fmt(out.reports.empty() ? std::nan("") : out.reports.back().accuracy) << '\n';
        std::cout << param << "=" << fmt(v) << " done\n";
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible allocation: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
