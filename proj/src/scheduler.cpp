#include "hpfl/scheduler.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace hpfl {

double selection_score(double rho, double phi, double grad_norm_sq, double latency) {
  double s = 0.0;
  if (rho > 0.0) s += rho * phi * grad_norm_sq;
  if (rho < 1.0) s -= (1.0 - rho) * latency;
  return s;
}

std::vector<int> mandatory_set(const std::vector<int>& staleness, int bound, int a_max) {
  const int k = static_cast<int>(staleness.size());
  int m = 0;
  for (int j = 0; j <= bound; ++j) {
    const int due = static_cast<int>(std::count_if(staleness.begin(), staleness.end(),
                                                   [&](int tau) { return tau >= bound - j; }));
    m = std::max(m, due - a_max * j);
  }
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return staleness[a] > staleness[b]; });
  order.resize(static_cast<std::size_t>(std::min(m, k)));
  std::sort(order.begin(), order.end());
  return order;
}

SelectionVector threshold_select(const std::vector<double>& grad_norm_sq, const std::vector<double>& latency,
                                 double rho, double phi) {
  SelectionVector sel = SelectionVector::none(grad_norm_sq.size());
  for (std::size_t k = 0; k < grad_norm_sq.size(); ++k)
    sel.pi[k] = selection_score(rho, phi, grad_norm_sq[k], latency[k]) >= 0.0 ? 1 : 0;
  return sel;
}

SelectionVector schedule(const ScheduleInput& in, const SchedulerConfig& cfg, double phi, Rng& rng,
                         std::vector<ImportanceRecord>* records) {
  const std::size_t k = in.grad_norm_sq.size();
  if (in.latency.size() != k || in.staleness.size() != k) throw std::invalid_argument("schedule: length mismatch");
  const std::vector<int> mandatory =
      cfg.force_select_stale ? mandatory_set(in.staleness, cfg.staleness_bound, cfg.a_max) : std::vector<int>{};

  SelectionVector sel;
  if (cfg.mode != SelectionMode::proposed) {
    sel = baseline_select(cfg.mode, static_cast<int>(k), cfg.a_max, rng, mandatory);
  } else {
    std::vector<double> score(k);
    for (std::size_t i = 0; i < k; ++i) score[i] = selection_score(cfg.rho, phi, in.grad_norm_sq[i], in.latency[i]);

    sel = SelectionVector::none(k);
    for (int m : mandatory) sel.pi[static_cast<std::size_t>(m)] = 1;
    std::vector<std::size_t> passers;
    for (std::size_t i = 0; i < k; ++i)
      if (!sel.selected(i) && score[i] >= 0.0) passers.push_back(i);
    std::stable_sort(passers.begin(), passers.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    for (std::size_t i : passers) {
      if (sel.a_effective() >= cfg.a_max) break;
      sel.pi[i] = 1;
    }
    if (sel.a_effective() == 0 && k > 0) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < k; ++i)
        if (score[i] > score[best]) best = i;
      sel.pi[best] = 1;
    }
  }

  if (records) {
    records->clear();
    for (std::size_t i = 0; i < k; ++i)
      records->push_back({static_cast<int>(i), phi * in.grad_norm_sq[i], in.latency[i], sel.pi[i]});
  }
  return sel;
}

double objective_value(const SelectionVector& sel, const std::vector<double>& grad_norm_sq,
                       const std::vector<double>& latency, double rho, double phi) {
  double importance = 0.0, worst = 0.0;
  for (std::size_t k = 0; k < sel.size(); ++k) {
    if (!sel.selected(k)) continue;
    importance += grad_norm_sq[k];
    worst = std::max(worst, latency[k]);
  }
  double v = 0.0;
  if (rho > 0.0) v -= rho * phi * importance;
  if (rho < 1.0) v += (1.0 - rho) * worst;
  return v;
}

double separable_objective(const SelectionVector& sel, const std::vector<double>& grad_norm_sq,
                           const std::vector<double>& latency, double rho, double phi) {
  double v = 0.0;
  for (std::size_t k = 0; k < sel.size(); ++k)
    if (sel.selected(k)) v -= selection_score(rho, phi, grad_norm_sq[k], latency[k]);
  return v;
}

SelectionVector baseline_select(SelectionMode mode, int k, int a_max, Rng& rng, const std::vector<int>& mandatory) {
  const auto n = static_cast<std::size_t>(k);
  if (mode == SelectionMode::full) return SelectionVector::all(n);
  if (mode != SelectionMode::random) throw std::invalid_argument("baseline_select: mode must be full or random");
  SelectionVector sel = SelectionVector::none(n);
  for (int m : mandatory) sel.pi[static_cast<std::size_t>(m)] = 1;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i)
    if (!sel.selected(i)) rest.push_back(i);
  const int slots = std::max(0, a_max - sel.a_effective());
  const std::size_t take = std::min(rest.size(), static_cast<std::size_t>(slots));
  for (std::size_t j : rng.sample(rest.size(), take)) sel.pi[rest[j]] = 1;
  return sel;
}

}  // namespace hpfl
