#include "hpfl/experiment.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "hpfl/bandwidth.hpp"
#include "hpfl/error.hpp"
#include "hpfl/kernels.hpp"
#include "hpfl/rng.hpp"
#include "hpfl/scheduler.hpp"
#include "hpfl/synthetic.hpp"

namespace hpfl {

namespace {

enum SeedStream : std::uint64_t { kTasks = 1, kTopology = 2, kInit = 3, kProbes = 4, kRandomSelect = 5 };

}  // namespace

std::vector<AuditRow> audit_loss_bound(const std::vector<AuditPoint>& trajectory, const SmoothnessConstants& constants,
                                     double beta, int S, int K) {
  std::vector<AuditRow> rows;
  rows.reserve(trajectory.size());
  for (const auto& p : trajectory) {
    const LossBoundConstants th = loss_bound_constants(beta, S, p.a_eff, K, constants.gamma_f_sq);
    double captured = 0.0;
    for (double g : p.stale_grad_norm_sq) captured += g;
    AuditRow r;
    r.lhs = p.f_after - p.f_before;
    r.rhs = th.phi * captured + th.nu;
    r.holds = r.lhs <= r.rhs;
    rows.push_back(r);
  }
  return rows;
}

Simulator::Simulator(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  tasks_ = make_tasks(cfg_.task, cfg_.ues_per_es, derive_seed(cfg_.seed, {kTasks}));

  std::vector<std::vector<double>> data_bits(tasks_.size());
  for (std::size_t k = 0; k < tasks_.size(); ++k)
    for (const auto& t : tasks_[k]) data_bits[k].push_back(static_cast<double>(t.train.size()) * cfg_.bits_per_sample);
  topology_ = make_topology(cfg_.topology(), std::move(data_bits), derive_seed(cfg_.seed, {kTopology}));

  const ParamVector w0 = initial_model(model_dim(cfg_.task), derive_seed(cfg_.seed, {kInit}));
  alpha_train_ = cfg_.algorithm == Algorithm::hpfl ? cfg_.alpha : 0.0;
  // The non-personalized baseline is scored on its global model as is.
  adapt_alpha_ = alpha_train_;

  if (cfg_.audit_enabled || cfg_.beta_rule == BetaRule::inverse_lf) {
    ProbeOptions probes;
    probes.center = w0;
    probes.radius = cfg_.probe_radius;
    probes.probe_count = cfg_.probe_count;
    probes.hessian_directions = cfg_.hessian_directions;
    probes.seed = derive_seed(cfg_.seed, {kProbes});
    constants_ = estimate_constants(tasks_, alpha_train_, probes);
  }
  beta_ = cfg_.beta;
  if (cfg_.beta_rule == BetaRule::inverse_lf) {
    if (!(constants_->l_f > 0.0)) throw ConfigError("learning.beta_rule", "estimated L_F is zero; cannot set beta = 1/L_F");
    beta_ = 1.0 / constants_->l_f;
  }
  scheduler_phi_ = cfg_.scheduler_phi
                       ? *cfg_.scheduler_phi
                       : loss_bound_constants(beta_, cfg_.staleness_bound, cfg_.a_max, cfg_.edge_servers, 0.0).phi;

  state_ = make_hierarchy(w0, cfg_.ues_per_es);
  versions_.push_back(w0);
  version_grad_sq_.emplace_back();
  initial_ = evaluate(tasks_, w0, alpha_train_, adapt_alpha_, context().policy);
  last_ = initial_;
}

RoundContext Simulator::context() const {
  RoundContext ctx;
  ctx.groups = &tasks_;
  ctx.alpha = alpha_train_;
  ctx.beta = beta_;
  ctx.staleness_bound = cfg_.staleness_bound;
  ctx.enforce_bound = cfg_.force_select_stale && cfg_.selection != SelectionMode::full;
  ctx.policy = cfg_.parallel ? ExecPolicy::parallel : ExecPolicy::serial;
  return ctx;
}

std::vector<double> Simulator::scheduling_latencies(const ChannelSnapshot& snapshot, const SelectionVector& prev) const {
  const std::size_t k_count = snapshot.es_links.size();
  auto priced = [&](const SelectionVector& sel) {
    const AllocationProblem pr = make_allocation_problem(snapshot, sel, cfg_.bandwidth_hz, cfg_.b_min_hz);
    const AllocationResult res =
        cfg_.allocation == AllocationMode::progressive ? progressive_fill(pr) : equal_split(pr, cfg_.ue_tier_share);
    std::vector<double> lat(k_count, kInfiniteLatency);
    for (std::size_t j = 0; j < pr.edges.size(); ++j) lat[static_cast<std::size_t>(pr.edges[j].es_id)] = res.es_latency[j];
    return lat;
  };
  const std::vector<double> base = priced(prev);
  std::vector<double> out(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    if (prev.selected(k)) {
      out[k] = base[k];
    } else {
      SelectionVector with = prev;
      with.pi[k] = 1;
      out[k] = priced(with)[k];
    }
  }
  return out;
}

double Simulator::realized_latency(ChannelSnapshot& snapshot, const SelectionVector& sel) const {
  const AllocationProblem pr = make_allocation_problem(snapshot, sel, cfg_.bandwidth_hz, cfg_.b_min_hz);
  const AllocationResult res =
      cfg_.allocation == AllocationMode::progressive ? progressive_fill(pr) : equal_split(pr, cfg_.ue_tier_share);
  apply_allocation(snapshot, pr, res);
  return latency_breakdown(snapshot, sel).round_latency;
}

double Simulator::exact_grad_norm_sq(int version) {
  auto& slot = version_grad_sq_.at(static_cast<std::size_t>(version));
  if (!slot)
    slot = global_meta_grad(tasks_, versions_[static_cast<std::size_t>(version)], alpha_train_, context().policy)
               .squaredNorm();
  return *slot;
}

RoundReport Simulator::step(const std::optional<SelectionVector>& forced) {
  using clock = std::chrono::steady_clock;
  const int t = state_.round;
  const std::size_t k_count = state_.edges.size();
  if (forced && forced->size() != k_count) throw std::invalid_argument("forced selection has the wrong length");

  ChannelSnapshot snapshot = sample_channels(topology_, t);
  const SelectionVector prev =
      state_.selected_history.empty() ? SelectionVector::all(k_count) : state_.selected_history.back();
  Rng rng(derive_seed(cfg_.seed, {kRandomSelect, static_cast<std::uint64_t>(t)}));

  double latency = 0.0, runtime_us = 0.0, importance = 0.0;
  std::vector<int> versions_used(k_count, 0);
  auto selector = [&](const HierarchyState& s) {
    const auto t0 = clock::now();
    ScheduleInput in;
    for (const auto& e : s.edges) {
      in.staleness.push_back(e.staleness);
      in.grad_norm_sq.push_back(e.grad_norm_sq);
      versions_used[static_cast<std::size_t>(e.es_id)] = e.last_global_version;
    }
    SelectionVector sel;
    if (forced) {
      sel = *forced;
    } else {
      in.latency = cfg_.selection == SelectionMode::proposed ? scheduling_latencies(snapshot, prev)
                                                             : std::vector<double>(k_count, 0.0);
      sel = schedule(in, cfg_.scheduler(), scheduler_phi_, rng);
    }
    latency = realized_latency(snapshot, sel);
    if (cfg_.measure_runtime)
      runtime_us = std::chrono::duration<double, std::micro>(clock::now() - t0).count();
    for (std::size_t k = 0; k < k_count; ++k)
      if (sel.selected(k)) importance += scheduler_phi_ * in.grad_norm_sq[k];
    return sel;
  };

  const double f_before = last_.train_loss;
  const SelectionVector sel = run_round(state_, context(), selector);
  versions_.push_back(state_.global_model);
  version_grad_sq_.emplace_back();
  last_ = evaluate(tasks_, state_.global_model, alpha_train_, adapt_alpha_, context().policy);

  RoundReport r;
  r.round = t;
  r.loss = last_.train_loss;
  r.accuracy = last_.has_accuracy ? last_.accuracy : std::numeric_limits<double>::quiet_NaN();
  r.latency = latency;
  r.importance = importance;
  r.a_eff = sel.a_effective();
  r.runtime_us = runtime_us;
  r.bound_rhs = std::numeric_limits<double>::quiet_NaN();
  r.selection = sel;
  for (const auto& e : state_.edges) r.staleness.push_back(e.staleness);

  if (constants_) {
    AuditPoint p;
    p.f_before = f_before;
    p.f_after = last_.train_loss;
    p.a_eff = r.a_eff;
    for (std::size_t k = 0; k < k_count; ++k)
      if (sel.selected(k)) p.stale_grad_norm_sq.push_back(exact_grad_norm_sq(versions_used[k]));
    r.bound_rhs = audit_loss_bound({p}, *constants_, beta_, cfg_.staleness_bound, cfg_.edge_servers).front().rhs;
    trail_.push_back(std::move(p));
  }
  return r;
}

std::vector<RoundReport> Simulator::run() {
  std::vector<RoundReport> out;
  while (state_.round < cfg_.rounds) out.push_back(step());
  return out;
}

std::vector<RoundReport> run_experiment(const ScenarioConfig& cfg) { return Simulator(cfg).run(); }

}  // namespace hpfl
