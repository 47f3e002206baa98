#include "hpfl/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "hpfl/error.hpp"
#include "hpfl/lambert_w.hpp"

namespace hpfl {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kClosedFormTolerance = 1e-9;

double rate(double snr_hz, double b) { return b <= 0.0 ? 0.0 : b * std::log2(1.0 + snr_hz / b); }

// Shortest transmission time of `payload` on a link as b -> infinity.
double min_time(double snr_hz, double payload) { return payload * kLn2 / snr_hz; }

double closed_form(double snr_hz, double payload, double t) {
  if (!(t > 0.0)) return std::nan("");
  const double gamma = payload * kLn2 / (t * snr_hz);
  if (!(gamma < 1.0)) return std::nan("");
  // b = s / u with (1 + u) = e^{Γu}; substituting v = -(Γ(1+u)) gives v e^v = -Γ e^{-Γ}.
  const double w = lambert_wm1(-gamma * std::exp(-gamma));
  const double b = -(payload * kLn2 / t) / (w + gamma);
  if (!(b > 0.0) || !std::isfinite(b)) return std::nan("");
  const double achieved = payload / rate(snr_hz, b);
  if (std::abs(achieved - t) > kClosedFormTolerance * t) return std::nan("");
  return b;
}

double bisection(double snr_hz, double payload, double t) {
  if (!(t > 0.0)) return std::nan("");
  const double target = payload / t;
  if (!(target < snr_hz / kLn2)) return std::nan("");
  double lo = target, hi = target;
  for (int i = 0; i < 2000 && rate(snr_hz, lo) > target; ++i) lo *= 0.5;
  for (int i = 0; i < 2000 && rate(snr_hz, hi) < target; ++i) hi *= 2.0;
  if (rate(snr_hz, hi) < target) return std::nan("");
  for (int i = 0; i < 400 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (rate(snr_hz, mid) < target ? lo : hi) = mid;
  }
  return hi;
}

double solve_link(double snr_hz, double payload, double t) {
  double b = closed_form(snr_hz, payload, t);
  if (std::isnan(b)) b = bisection(snr_hz, payload, t);
  return std::isnan(b) ? kInf : b;
}

// dr/db = (ln(1 + x) - x / (1 + x)) / ln 2 with x = s / b. The difference
// cancels for small x, where the series x^2/2 - 2x^3/3 + 3x^4/4 takes over.
double rate_slope(double snr_hz, double b) {
  const double x = snr_hz / b;
  if (x < 1e-3) return x * x * (0.5 - x * (2.0 / 3.0 - 0.75 * x)) / kLn2;
  return (std::log1p(x) - x / (1.0 + x)) / kLn2;
}

struct Demand {
  double b;
  double db_dt;  // derivative of the floored demand w.r.t. available time
};

Demand demand(double snr_hz, double payload, double t, double b_min) {
  if (!(t > min_time(snr_hz, payload))) return {kInf, -kInf};
  const double b = solve_link(snr_hz, payload, t);
  if (!std::isfinite(b)) return {kInf, -kInf};
  if (b <= b_min) return {b_min, 0.0};
  return {b, -(payload / (t * t)) / rate_slope(snr_hz, b)};
}

struct EdgeSolver {
  const AllocationProblem& pr;
  std::vector<std::vector<double>> ue_snr;
  std::vector<double> es_snr;

  explicit EdgeSolver(const AllocationProblem& p) : pr(p) {
    for (const auto& e : pr.edges) {
      std::vector<double> s;
      for (const auto& u : e.ues) s.push_back(u.power_w * u.gain / pr.noise_w_per_hz);
      ue_snr.push_back(std::move(s));
      es_snr.push_back(e.es_power_w * e.es_gain / pr.noise_w_per_hz);
    }
  }

  bool has_es_hop() const { return pr.es_payload_bits > 0.0; }

  double g_floor(std::size_t k) const {
    double g = 0.0;
    for (std::size_t i = 0; i < pr.edges[k].ues.size(); ++i)
      g = std::max(g, pr.edges[k].ues[i].tcmp_s + min_time(ue_snr[k][i], pr.payload_bits));
    return g;
  }

  double es_floor(std::size_t k) const { return has_es_hop() ? min_time(es_snr[k], pr.es_payload_bits) : 0.0; }

  double latency_floor(std::size_t k) const { return g_floor(k) + es_floor(k); }

  // Total floored demand of edge k and its derivative when UEs finish at g and the cloud hop ends at o.
  Demand total(std::size_t k, double g, double o) const {
    Demand sum{0.0, 0.0};
    for (std::size_t i = 0; i < pr.edges[k].ues.size(); ++i) {
      const Demand d = demand(ue_snr[k][i], pr.payload_bits, g - pr.edges[k].ues[i].tcmp_s, pr.b_min_hz);
      sum.b += d.b;
      sum.db_dt += d.db_dt;
    }
    if (has_es_hop()) {
      const Demand d = demand(es_snr[k], pr.es_payload_bits, o - g, pr.b_min_hz);
      sum.b += d.b;
      sum.db_dt -= d.db_dt;
    }
    return sum;
  }

  // Best split point G for edge k at latency o; returns {G, bandwidth}.
  std::pair<double, double> best_split(std::size_t k, double o) const {
    if (!has_es_hop()) return {o, total(k, o, o).b};
    const double lo = g_floor(k);
    const double hi = o - es_floor(k);
    if (!(hi > lo)) return {lo, kInf};
    const double width = hi - lo;
    const double a = lo + 1e-12 * width;
    const double b = hi - 1e-12 * width;
    auto slope = [&](double g) { return total(k, g, o).db_dt; };
    double g;
    if (slope(a) >= 0.0) {
      g = a;
    } else if (slope(b) <= 0.0) {
      g = b;
    } else {
      std::uintmax_t iters = 200;
      const auto r = boost::math::tools::toms748_solve(slope, a, b, boost::math::tools::eps_tolerance<double>(44), iters);
      g = 0.5 * (r.first + r.second);
    }
    return {g, total(k, g, o).b};
  }

  double need(double o) const {
    double s = 0.0;
    for (std::size_t k = 0; k < pr.edges.size(); ++k) {
      s += best_split(k, o).second;
      if (!std::isfinite(s)) return kInf;
    }
    return s;
  }
};

AllocationResult finish(const AllocationProblem& pr, AllocationResult res) {
  res.es_latency = allocation_latencies(pr, res.b_ue, res.b_es);
  res.ue_tier_time.assign(pr.edges.size(), 0.0);
  res.used_bandwidth_hz = 0.0;
  for (std::size_t k = 0; k < pr.edges.size(); ++k) {
    for (std::size_t i = 0; i < pr.edges[k].ues.size(); ++i) {
      LinkParams l{pr.edges[k].ues[i].power_w, pr.edges[k].ues[i].gain, pr.noise_w_per_hz, res.b_ue[k][i]};
      res.ue_tier_time[k] = std::max(res.ue_tier_time[k], pr.edges[k].ues[i].tcmp_s + tcom(pr.payload_bits, l));
      res.used_bandwidth_hz += res.b_ue[k][i];
    }
    res.used_bandwidth_hz += res.b_es[k];
  }
  res.achieved_latency = 0.0;
  for (double o : res.es_latency) res.achieved_latency = std::max(res.achieved_latency, o);
  return res;
}

}  // namespace

void AllocationProblem::validate() const {
  if (!(total_bandwidth_hz > 0.0) || !std::isfinite(total_bandwidth_hz))
    throw ConfigError("bandwidth.total_hz", "must be positive and finite");
  if (!(payload_bits > 0.0) || !std::isfinite(payload_bits))
    throw ConfigError("network.payload_bits", "must be positive and finite");
  if (!(es_payload_bits >= 0.0) || !std::isfinite(es_payload_bits))
    throw ConfigError("network.es_payload_bits", "must be non-negative and finite");
  if (!(noise_w_per_hz > 0.0)) throw ConfigError("network.noise_dbm_per_hz", "noise density must be positive");
  if (!(b_min_hz >= 0.0)) throw ConfigError("bandwidth.b_min_hz", "must be non-negative");
  for (const auto& e : edges) {
    if (e.ues.empty()) throw ConfigError("topology.ues_per_es", "edge server " + std::to_string(e.es_id) + " has no UEs");
    for (const auto& u : e.ues) {
      if (!(u.power_w > 0.0) || !(u.gain > 0.0) || !(u.tcmp_s >= 0.0))
        throw ConfigError("network", "invalid UE link under edge server " + std::to_string(e.es_id));
    }
    if (es_payload_bits > 0.0 && (!(e.es_power_w > 0.0) || !(e.es_gain > 0.0)))
      throw ConfigError("network", "invalid ES link for edge server " + std::to_string(e.es_id));
  }
}

AllocationProblem make_allocation_problem(const ChannelSnapshot& snapshot, const SelectionVector& selection,
                                          double total_bandwidth_hz, double b_min_hz) {
  AllocationProblem pr;
  pr.total_bandwidth_hz = total_bandwidth_hz;
  pr.payload_bits = snapshot.payload_bits;
  pr.es_payload_bits = snapshot.es_payload_bits;
  pr.b_min_hz = b_min_hz;
  if (!snapshot.es_links.empty()) pr.noise_w_per_hz = snapshot.es_links.front().noise_w_per_hz;
  for (std::size_t k = 0; k < selection.size(); ++k) {
    if (!selection.selected(k)) continue;
    EdgePath e;
    e.es_id = static_cast<int>(k);
    for (std::size_t i = 0; i < snapshot.ue_links[k].size(); ++i) {
      const auto& l = snapshot.ue_links[k][i];
      e.ues.push_back({l.power_w, l.gain, tcmp(snapshot.ue_compute[k][i])});
    }
    e.es_power_w = snapshot.es_links[k].power_w;
    e.es_gain = snapshot.es_links[k].gain;
    pr.edges.push_back(std::move(e));
  }
  return pr;
}

void apply_allocation(ChannelSnapshot& snapshot, const AllocationProblem& problem, const AllocationResult& result) {
  for (auto& row : snapshot.ue_links)
    for (auto& l : row) l.bandwidth_hz = 0.0;
  for (auto& l : snapshot.es_links) l.bandwidth_hz = 0.0;
  for (std::size_t k = 0; k < problem.edges.size(); ++k) {
    const auto es = static_cast<std::size_t>(problem.edges[k].es_id);
    for (std::size_t i = 0; i < result.b_ue[k].size(); ++i) snapshot.ue_links[es][i].bandwidth_hz = result.b_ue[k][i];
    snapshot.es_links[es].bandwidth_hz = result.b_es[k];
  }
}

double link_bandwidth_closed_form(double power_w, double gain, double noise_w_per_hz, double payload_bits,
                                  double time_s) {
  return closed_form(power_w * gain / noise_w_per_hz, payload_bits, time_s);
}

double link_bandwidth_bisection(double power_w, double gain, double noise_w_per_hz, double payload_bits,
                                double time_s) {
  return bisection(power_w * gain / noise_w_per_hz, payload_bits, time_s);
}

std::vector<double> solve_ue_bandwidth(const EdgePath& edge, double g_target, double payload_bits,
                                       double noise_w_per_hz) {
  std::vector<double> out;
  out.reserve(edge.ues.size());
  for (std::size_t i = 0; i < edge.ues.size(); ++i) {
    const auto& u = edge.ues[i];
    const double t = g_target - u.tcmp_s;
    const std::string who = "UE " + std::to_string(i) + " of edge server " + std::to_string(edge.es_id);
    if (!(t > 0.0)) throw InfeasibleError(who + ": target time does not exceed its computation time");
    const double b = solve_link(u.power_w * u.gain / noise_w_per_hz, payload_bits, t);
    if (!std::isfinite(b)) throw InfeasibleError(who + ": target time is below the infinite-bandwidth limit");
    out.push_back(b);
  }
  return out;
}

AllocationResult progressive_fill(const AllocationProblem& problem) {
  problem.validate();
  AllocationResult res;
  if (problem.edges.empty()) return res;

  const EdgeSolver solver(problem);
  const double budget = problem.total_bandwidth_hz;

  double o_lo = 0.0;
  for (std::size_t k = 0; k < problem.edges.size(); ++k) o_lo = std::max(o_lo, solver.latency_floor(k));
  const AllocationResult eq = equal_split(problem);
  double o_hi = eq.achieved_latency;
  if (!std::isfinite(o_hi)) throw InfeasibleError("equal split yields an unbounded latency");
  // Equal split is feasible by construction, so only rounding can push its demand over budget.
  for (int i = 0; i < 64 && solver.need(o_hi) > budget; ++i) o_hi = o_lo + 2.0 * (o_hi - o_lo);
  if (solver.need(o_hi) > budget) throw InfeasibleError("bandwidth budget below the per-link floor");

  // Move the lower end off the asymptote to a finite point whose demand exceeds the budget.
  double need_lo = kInf;
  for (int i = 0; i < 400 && !std::isfinite(need_lo); ++i) {
    const double mid = 0.5 * (o_lo + o_hi);
    const double n = solver.need(mid);
    if (n <= budget) {
      o_hi = mid;
    } else {
      o_lo = mid;
      need_lo = n;
    }
  }
  if (std::isfinite(need_lo)) {
    auto excess = [&](double o) { return solver.need(o) - budget; };
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(excess, o_lo, o_hi, need_lo - budget,
                                                      solver.need(o_hi) - budget,
                                                      boost::math::tools::eps_tolerance<double>(50), iters);
    o_lo = r.first;
    o_hi = r.second;
    // Keep the feasible end; tighten until the leftover budget is negligible.
    for (int i = 0; i < 200 && budget - solver.need(o_hi) > 1e-6 * budget; ++i) {
      const double mid = 0.5 * (o_lo + o_hi);
      (solver.need(mid) <= budget ? o_hi : o_lo) = mid;
    }
  }

  const double o_star = o_hi;
  for (std::size_t k = 0; k < problem.edges.size(); ++k) {
    const auto [g, _] = solver.best_split(k, o_star);
    std::vector<double> b;
    for (std::size_t i = 0; i < problem.edges[k].ues.size(); ++i)
      b.push_back(demand(solver.ue_snr[k][i], problem.payload_bits, g - problem.edges[k].ues[i].tcmp_s,
                         problem.b_min_hz)
                      .b);
    res.b_ue.push_back(std::move(b));
    res.b_es.push_back(solver.has_es_hop()
                           ? demand(solver.es_snr[k], problem.es_payload_bits, o_star - g, problem.b_min_hz).b
                           : 0.0);
  }
  return finish(problem, std::move(res));
}

AllocationResult equal_split(const AllocationProblem& problem, std::optional<double> ue_tier_share) {
  problem.validate();
  AllocationResult res;
  if (problem.edges.empty()) return res;
  const bool es_hop = problem.es_payload_bits > 0.0;
  std::size_t ue_links = 0;
  for (const auto& e : problem.edges) ue_links += e.ues.size();
  const std::size_t es_links = es_hop ? problem.edges.size() : 0;
  const double budget = problem.total_bandwidth_hz;

  double per_ue, per_es;
  if (ue_tier_share && es_hop) {
    if (!(*ue_tier_share > 0.0 && *ue_tier_share < 1.0))
      throw ConfigError("bandwidth.ue_tier_share", "must lie strictly between 0 and 1");
    per_ue = *ue_tier_share * budget / static_cast<double>(ue_links);
    per_es = (1.0 - *ue_tier_share) * budget / static_cast<double>(es_links);
  } else {
    per_ue = per_es = budget / static_cast<double>(ue_links + es_links);
  }
  if (per_ue < problem.b_min_hz || (es_hop && per_es < problem.b_min_hz))
    throw InfeasibleError("bandwidth budget below the per-link floor");

  for (const auto& e : problem.edges) {
    res.b_ue.emplace_back(e.ues.size(), per_ue);
    res.b_es.push_back(es_hop ? per_es : 0.0);
  }
  return finish(problem, std::move(res));
}

std::vector<double> allocation_latencies(const AllocationProblem& problem, const std::vector<std::vector<double>>& b_ue,
                                         const std::vector<double>& b_es) {
  std::vector<double> out;
  for (std::size_t k = 0; k < problem.edges.size(); ++k) {
    const auto& e = problem.edges[k];
    double g = 0.0;
    for (std::size_t i = 0; i < e.ues.size(); ++i) {
      LinkParams l{e.ues[i].power_w, e.ues[i].gain, problem.noise_w_per_hz, b_ue[k][i]};
      g = std::max(g, e.ues[i].tcmp_s + tcom(problem.payload_bits, l));
    }
    double es = 0.0;
    if (problem.es_payload_bits > 0.0)
      es = tcom(problem.es_payload_bits, LinkParams{e.es_power_w, e.es_gain, problem.noise_w_per_hz, b_es[k]});
    out.push_back(g + es);
  }
  return out;
}

}  // namespace hpfl
