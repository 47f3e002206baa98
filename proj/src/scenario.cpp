#include "hpfl/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hpfl/error.hpp"

namespace hpfl {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering which keys were consumed so that
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    const json* v = find(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw ConfigError(field(key), "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v->is_number()) throw ConfigError(field(key), "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw ConfigError(field(key), "expected a string");
      }
      out = v->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(field(key), e.what());
    }
  }

  template <typename T>
  void get(const std::string& key, std::optional<T>& out) {
    if (!j_.contains(key) || j_.at(key).is_null()) {
      seen_.insert(key);
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  Section sub(const std::string& key) {
    const json* v = find(key);
    static const json empty = json::object();
    return Section(v ? *v : empty, field(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

}  // namespace

std::string to_string(Algorithm a) { return a == Algorithm::hpfl ? "hpfl" : "hfl"; }

std::string to_string(SelectionMode m) {
  switch (m) {
    case SelectionMode::proposed: return "proposed";
    case SelectionMode::full: return "full";
    case SelectionMode::random: return "random";
  }
  return "?";
}

std::string to_string(AllocationMode m) { return m == AllocationMode::progressive ? "progressive" : "equal"; }

Algorithm parse_algorithm(const std::string& s) {
  if (s == "hpfl") return Algorithm::hpfl;
  if (s == "hfl") return Algorithm::hfl;
  throw ConfigError("algorithm", "expected hpfl or hfl, got '" + s + "'");
}

SelectionMode parse_selection(const std::string& s) {
  if (s == "proposed") return SelectionMode::proposed;
  if (s == "full") return SelectionMode::full;
  if (s == "random") return SelectionMode::random;
  throw ConfigError("selection", "expected proposed, full or random, got '" + s + "'");
}

AllocationMode parse_allocation(const std::string& s) {
  if (s == "progressive") return AllocationMode::progressive;
  if (s == "equal") return AllocationMode::equal;
  throw ConfigError("allocation", "expected progressive or equal, got '" + s + "'");
}

void ScenarioConfig::validate() const {
  require(rounds >= 0, "rounds", "must be >= 0");
  require(dataset_profile == "mnist" || dataset_profile == "cifar10", "dataset_profile", "expected mnist or cifar10");
  require(alpha >= 0.0 && std::isfinite(alpha), "learning.alpha", "must be >= 0");
  require(positive(beta), "learning.beta", "must be > 0");

  require(edge_servers >= 1, "topology.edge_servers", "must be >= 1");
  require(static_cast<int>(ues_per_es.size()) == edge_servers, "topology.ues_per_es",
          "length must equal edge_servers");
  for (int n : ues_per_es) require(n >= 1, "topology.ues_per_es", "every ES needs at least one UE");
  require(positive(ue_distance_min_m) && ue_distance_max_m >= ue_distance_min_m, "topology.ue_distance_m",
          "need 0 < min <= max");
  require(positive(es_distance_min_m) && es_distance_max_m >= es_distance_min_m, "topology.es_distance_m",
          "need 0 < min <= max");
  require(std::isfinite(ue_path_gain_db), "topology.ue_path_gain_db", "must be finite");
  require(std::isfinite(es_path_gain_db), "topology.es_path_gain_db", "must be finite");

  require(rho >= 0.0 && rho <= 1.0, "scheduler.rho", "must lie in [0, 1]");
  require(a_max >= 1 && a_max <= edge_servers, "scheduler.a_max", "must lie in [1, edge_servers]");
  require(staleness_bound >= 0, "scheduler.staleness_bound", "must be >= 0");
  if (force_select_stale && selection != SelectionMode::full)
    require(edge_servers <= a_max * (staleness_bound + 1), "scheduler.staleness_bound",
            "edge_servers exceeds a_max * (staleness_bound + 1); the bound cannot be kept");
  if (scheduler_phi) require(*scheduler_phi >= 0.0 && std::isfinite(*scheduler_phi), "scheduler.phi", "must be >= 0");

  require(positive(bandwidth_hz), "network.bandwidth_hz", "must be > 0");
  require(b_min_hz >= 0.0 && b_min_hz < bandwidth_hz, "network.b_min_hz", "must lie in [0, bandwidth_hz)");
  require(std::isfinite(noise_dbm_per_hz), "network.noise_dbm_per_hz", "must be finite");
  require(positive(ue_power_w), "network.ue_power_w", "must be > 0");
  require(positive(es_power_w), "network.es_power_w", "must be > 0");
  require(positive(cycles_per_bit), "network.cycles_per_bit", "must be > 0");
  require(positive(cpu_hz), "network.cpu_hz", "must be > 0");
  require(positive(payload_bits), "network.payload_bits", "must be > 0");
  require(es_payload_fraction >= 0.0 && es_payload_fraction <= 1.0, "network.es_payload_fraction",
          "must lie in [0, 1]");
  require(positive(bits_per_sample), "network.bits_per_sample", "must be > 0");
  if (ue_tier_share)
    require(*ue_tier_share > 0.0 && *ue_tier_share < 1.0, "network.ue_tier_share", "must lie in (0, 1)");

  require(task.family == "gaussian_mixture" || task.family == "quadratic", "task.family",
          "expected gaussian_mixture or quadratic");
  require(task.model == "softmax" || task.model == "mlp", "task.model", "expected softmax or mlp");
  require(task.features >= 1, "task.features", "must be >= 1");
  require(task.hidden >= 1, "task.hidden", "must be >= 1");
  require(task.classes >= 2 && task.classes <= 10, "task.classes", "must lie in [2, 10]");
  require(task.heterogeneity >= 1 && task.heterogeneity <= 10, "task.heterogeneity", "must lie in [1, 10]");
  require(task.heterogeneity <= task.classes, "task.heterogeneity", "cannot exceed task.classes");
  require(task.separation >= 0.0, "task.separation", "must be >= 0");
  require(task.noise > 0.0, "task.noise", "must be > 0");
  require(task.samples_min >= 1 && task.samples_max >= task.samples_min, "task.samples_min",
          "need 1 <= samples_min <= samples_max");
  require(task.test_samples >= 1, "task.test_samples", "must be >= 1");
  require(task.l2 >= 0.0, "task.l2", "must be >= 0");

  require(probe_count >= 2, "audit.probe_count", "must be >= 2");
  require(positive(probe_radius), "audit.probe_radius", "must be > 0");
  require(hessian_directions >= 1, "audit.hessian_directions", "must be >= 1");
}

TopologyConfig ScenarioConfig::topology() const {
  TopologyConfig t;
  t.ues_per_es = ues_per_es;
  t.ue_distance_min_m = ue_distance_min_m;
  t.ue_distance_max_m = ue_distance_max_m;
  t.es_distance_min_m = es_distance_min_m;
  t.es_distance_max_m = es_distance_max_m;
  t.ue_path_gain_db = ue_path_gain_db;
  t.es_path_gain_db = es_path_gain_db;
  t.ue_power_w = ue_power_w;
  t.es_power_w = es_power_w;
  t.noise_dbm_per_hz = noise_dbm_per_hz;
  t.cycles_per_bit = cycles_per_bit;
  t.cpu_hz = cpu_hz;
  t.payload_bits = payload_bits;
  t.es_payload_bits = payload_bits * es_payload_fraction;
  return t;
}

SchedulerConfig ScenarioConfig::scheduler() const {
  SchedulerConfig s;
  s.rho = rho;
  s.a_max = a_max;
  s.staleness_bound = staleness_bound;
  s.mode = selection;
  s.force_select_stale = force_select_stale;
  return s;
}

ScenarioConfig scenario_from_json_text(const std::string& text) {
  json j;
  try {
    j = text.find_first_not_of(" \t\r\n") == std::string::npos ? json::object() : json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("parse error: ") + e.what());
  }
  ScenarioConfig c;
  Section root(j, "");

  std::string s;
  root.get("seed", c.seed);
  root.get("rounds", c.rounds);
  s = to_string(c.algorithm);
  root.get("algorithm", s);
  c.algorithm = parse_algorithm(s);
  s = to_string(c.selection);
  root.get("selection", s);
  c.selection = parse_selection(s);
  s = to_string(c.allocation);
  root.get("allocation", s);
  c.allocation = parse_allocation(s);
  root.get("dataset_profile", c.dataset_profile);
  if (c.dataset_profile == "cifar10") {
    c.alpha = 0.02;
    c.beta = 0.06;
  }

  {
    Section l = root.sub("learning");
    l.get("alpha", c.alpha);
    l.get("beta", c.beta);
    std::string rule = "fixed";
    l.get("beta_rule", rule);
    if (rule == "fixed") c.beta_rule = BetaRule::fixed;
    else if (rule == "inverse_lf") c.beta_rule = BetaRule::inverse_lf;
    else throw ConfigError("learning.beta_rule", "expected fixed or inverse_lf");
    l.finish();
  }
  {
    Section t = root.sub("topology");
    const bool has_k = t.find("edge_servers") != nullptr;
    t.get("edge_servers", c.edge_servers);
    if (const json* n = t.find("ues_per_es")) {
      if (n->is_number_integer()) {
        c.ues_per_es.assign(static_cast<std::size_t>(std::max(c.edge_servers, 0)), n->get<int>());
      } else if (n->is_array()) {
        c.ues_per_es.clear();
        for (const auto& x : *n) {
          if (!x.is_number_integer()) throw ConfigError("topology.ues_per_es", "expected integers");
          c.ues_per_es.push_back(x.get<int>());
        }
        if (!has_k) c.edge_servers = static_cast<int>(c.ues_per_es.size());
      } else {
        throw ConfigError("topology.ues_per_es", "expected an integer or an array of integers");
      }
    } else if (has_k) {
      c.ues_per_es.assign(static_cast<std::size_t>(std::max(c.edge_servers, 0)), 4);
    }
    t.get("ue_distance_min_m", c.ue_distance_min_m);
    t.get("ue_distance_max_m", c.ue_distance_max_m);
    t.get("es_distance_min_m", c.es_distance_min_m);
    t.get("es_distance_max_m", c.es_distance_max_m);
    t.get("ue_path_gain_db", c.ue_path_gain_db);
    t.get("es_path_gain_db", c.es_path_gain_db);
    t.finish();
  }
  {
    Section sc = root.sub("scheduler");
    sc.get("rho", c.rho);
    sc.get("a_max", c.a_max);
    sc.get("staleness_bound", c.staleness_bound);
    sc.get("force_select_stale", c.force_select_stale);
    sc.get("phi", c.scheduler_phi);
    sc.finish();
  }
  {
    Section n = root.sub("network");
    n.get("bandwidth_hz", c.bandwidth_hz);
    n.get("b_min_hz", c.b_min_hz);
    n.get("noise_dbm_per_hz", c.noise_dbm_per_hz);
    n.get("ue_power_w", c.ue_power_w);
    n.get("es_power_w", c.es_power_w);
    n.get("cycles_per_bit", c.cycles_per_bit);
    n.get("cpu_hz", c.cpu_hz);
    n.get("payload_bits", c.payload_bits);
    n.get("es_payload_fraction", c.es_payload_fraction);
    n.get("bits_per_sample", c.bits_per_sample);
    n.get("ue_tier_share", c.ue_tier_share);
    n.finish();
  }
  {
    Section t = root.sub("task");
    t.get("family", c.task.family);
    t.get("model", c.task.model);
    t.get("features", c.task.features);
    t.get("hidden", c.task.hidden);
    t.get("classes", c.task.classes);
    t.get("separation", c.task.separation);
    t.get("noise", c.task.noise);
    t.get("samples_min", c.task.samples_min);
    t.get("samples_max", c.task.samples_max);
    t.get("test_samples", c.task.test_samples);
    t.get("heterogeneity", c.task.heterogeneity);
    t.get("l2", c.task.l2);
    t.finish();
  }
  {
    Section a = root.sub("audit");
    a.get("enabled", c.audit_enabled);
    a.get("probe_count", c.probe_count);
    a.get("probe_radius", c.probe_radius);
    a.get("hessian_directions", c.hessian_directions);
    a.finish();
  }
  {
    Section e = root.sub("execution");
    e.get("parallel", c.parallel);
    e.get("measure_runtime", c.measure_runtime);
    e.finish();
  }
  root.finish();
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json_text(ss.str());
}

std::string scenario_to_json_text(const ScenarioConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["rounds"] = c.rounds;
  j["algorithm"] = to_string(c.algorithm);
  j["selection"] = to_string(c.selection);
  j["allocation"] = to_string(c.allocation);
  j["dataset_profile"] = c.dataset_profile;
  j["learning"] = {{"alpha", c.alpha},
                   {"beta", c.beta},
                   {"beta_rule", c.beta_rule == BetaRule::fixed ? "fixed" : "inverse_lf"}};
  j["topology"] = {{"edge_servers", c.edge_servers},
                   {"ues_per_es", c.ues_per_es},
                   {"ue_distance_min_m", c.ue_distance_min_m},
                   {"ue_distance_max_m", c.ue_distance_max_m},
                   {"es_distance_min_m", c.es_distance_min_m},
                   {"es_distance_max_m", c.es_distance_max_m},
                   {"ue_path_gain_db", c.ue_path_gain_db},
                   {"es_path_gain_db", c.es_path_gain_db}};
  j["scheduler"] = {{"rho", c.rho},
                    {"a_max", c.a_max},
                    {"staleness_bound", c.staleness_bound},
                    {"force_select_stale", c.force_select_stale},
                    {"phi", c.scheduler_phi ? json(*c.scheduler_phi) : json(nullptr)}};
  j["network"] = {{"bandwidth_hz", c.bandwidth_hz},
                  {"b_min_hz", c.b_min_hz},
                  {"noise_dbm_per_hz", c.noise_dbm_per_hz},
                  {"ue_power_w", c.ue_power_w},
                  {"es_power_w", c.es_power_w},
                  {"cycles_per_bit", c.cycles_per_bit},
                  {"cpu_hz", c.cpu_hz},
                  {"payload_bits", c.payload_bits},
                  {"es_payload_fraction", c.es_payload_fraction},
                  {"bits_per_sample", c.bits_per_sample},
                  {"ue_tier_share", c.ue_tier_share ? json(*c.ue_tier_share) : json(nullptr)}};
  j["task"] = {{"family", c.task.family},
               {"model", c.task.model},
               {"features", c.task.features},
               {"hidden", c.task.hidden},
               {"classes", c.task.classes},
               {"separation", c.task.separation},
               {"noise", c.task.noise},
               {"samples_min", c.task.samples_min},
               {"samples_max", c.task.samples_max},
               {"test_samples", c.task.test_samples},
               {"heterogeneity", c.task.heterogeneity},
               {"l2", c.task.l2}};
  j["audit"] = {{"enabled", c.audit_enabled},
                {"probe_count", c.probe_count},
                {"probe_radius", c.probe_radius},
                {"hessian_directions", c.hessian_directions}};
  j["execution"] = {{"parallel", c.parallel}, {"measure_runtime", c.measure_runtime}};
  return j.dump(2);
}

void save_scenario(const ScenarioConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << scenario_to_json_text(cfg) << "\n";
}

std::uint64_t config_hash(const ScenarioConfig& cfg) {
  // The thread policy does not change results, so it stays out of the hash.
  json j = json::parse(scenario_to_json_text(cfg));
  j["execution"].erase("parallel");
  const std::string canon = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace hpfl
