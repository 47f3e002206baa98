#include "hpfl/hierarchy.hpp"

#include <stdexcept>
#include <string>

#include "hpfl/error.hpp"

namespace hpfl {

ParamVector EdgeState::mean_meta_grad() const {
  if (cached_meta_grads.empty()) throw std::logic_error("edge server " + std::to_string(es_id) + " has no cached gradient");
  return edge_aggregate(cached_meta_grads);
}

HierarchyState make_hierarchy(const ParamVector& w0, const std::vector<int>& ues_per_es) {
  HierarchyState s;
  s.global_model = w0;
  for (std::size_t k = 0; k < ues_per_es.size(); ++k) {
    EdgeState e;
    e.es_id = static_cast<int>(k);
    e.ue_models.assign(static_cast<std::size_t>(ues_per_es[k]), w0);
    e.edge_model = w0;
    s.edges.push_back(std::move(e));
  }
  return s;
}

ParamVector edge_aggregate(const std::vector<ParamVector>& ue_models) {
  if (ue_models.empty()) throw std::invalid_argument("edge_aggregate: no UE models");
  ParamVector sum = ue_models.front();
  for (std::size_t i = 1; i < ue_models.size(); ++i) {
    if (ue_models[i].size() != sum.size()) throw std::invalid_argument("edge_aggregate: dimension mismatch");
    sum += ue_models[i];
  }
  return sum / static_cast<double>(ue_models.size());
}

ParamVector global_update(const HierarchyState& state, const SelectionVector& selection, double beta) {
  const int a = selection.a_effective();
  if (a < 1) throw std::invalid_argument("global_update: empty selection");
  if (selection.size() != state.edges.size()) throw std::invalid_argument("global_update: selection length");
  ParamVector step = ParamVector::Zero(state.global_model.size());
  for (std::size_t k = 0; k < state.edges.size(); ++k)
    if (selection.selected(k)) step += state.edges[k].mean_meta_grad();
  return state.global_model - (beta / a) * step;
}

void advance_staleness(HierarchyState& state, const SelectionVector& selection, int bound, bool enforce) {
  if (selection.size() != state.edges.size()) throw std::invalid_argument("advance_staleness: selection length");
  for (std::size_t k = 0; k < state.edges.size(); ++k) {
    const auto& e = state.edges[k];
    if (enforce && !selection.selected(k) && e.staleness + 1 > bound)
      throw StalenessOverflow(e.es_id, e.staleness + 1, bound);
  }
  for (std::size_t k = 0; k < state.edges.size(); ++k) {
    auto& e = state.edges[k];
    if (selection.selected(k)) {
      e.staleness = 0;
      e.last_global_version = state.round + 1;
      e.cache_valid = false;
    } else {
      ++e.staleness;
    }
  }
}

void refresh_local_updates(HierarchyState& state, const RoundContext& ctx) {
  std::vector<int> stale;
  for (const auto& e : state.edges)
    if (!e.cache_valid) stale.push_back(e.es_id);
  if (stale.empty()) return;
  std::vector<std::vector<ParamVector>> grads;
  try {
    grads = compute_meta_grads(*ctx.groups, stale, state.global_model, ctx.alpha, ctx.policy);
  } catch (const NumericalError& e) {
    throw e.with_context(state.round, e.es(), e.ue());
  }
  for (std::size_t s = 0; s < stale.size(); ++s) {
    auto& e = state.edges[static_cast<std::size_t>(stale[s])];
    e.cached_meta_grads = std::move(grads[s]);
    e.ue_models.clear();
    for (const auto& g : e.cached_meta_grads) e.ue_models.push_back(state.global_model - ctx.beta * g);
    e.edge_model = edge_aggregate(e.ue_models);
    e.grad_norm_sq = e.mean_meta_grad().squaredNorm();
    e.cache_valid = true;
  }
}

SelectionVector run_round(HierarchyState& state, const RoundContext& ctx, const Selector& select) {
  refresh_local_updates(state, ctx);
  SelectionVector sel = select(state);
  if (sel.size() != state.edges.size() || sel.a_effective() < 1)
    throw std::logic_error("run_round: selector returned an invalid selection");
  ParamVector next = global_update(state, sel, ctx.beta);
  if (!all_finite(next)) throw NumericalError("non-finite global model", state.round);
  advance_staleness(state, sel, ctx.staleness_bound, ctx.enforce_bound);
  state.global_model = std::move(next);
  state.selected_history.push_back(sel);
  ++state.round;
  return sel;
}

}  // namespace hpfl
