#pragma once

#include <functional>
#include <vector>

#include "hpfl/kernels.hpp"
#include "hpfl/param.hpp"
#include "hpfl/pfl.hpp"
#include "hpfl/selection.hpp"

namespace hpfl {

struct EdgeState {
  int es_id = 0;
  std::vector<ParamVector> ue_models;
  ParamVector edge_model;
  std::vector<ParamVector> cached_meta_grads;  // computed at global version last_global_version
  int last_global_version = 0;
  int staleness = 0;
  double grad_norm_sq = 0.0;  // squared norm of the mean cached meta-gradient
  bool cache_valid = false;   // false until the ES trains on its latest global model

  ParamVector mean_meta_grad() const;
};

struct HierarchyState {
  ParamVector global_model;
  std::vector<EdgeState> edges;
  int round = 0;
  std::vector<SelectionVector> selected_history;
};

HierarchyState make_hierarchy(const ParamVector& w0, const std::vector<int>& ues_per_es);

// Mean of UE models, summed left to right.
ParamVector edge_aggregate(const std::vector<ParamVector>& ue_models);

// w_t - (beta / A) sum over selected ESs of their mean cached meta-gradient.
ParamVector global_update(const HierarchyState& state, const SelectionVector& selection, double beta);

// Selected ESs resynchronize (tau = 0, version t + 1, cache invalidated);
// others age by one. Throws StalenessOverflow if an ES would exceed `bound`
// and `enforce` is set.
void advance_staleness(HierarchyState& state, const SelectionVector& selection, int bound, bool enforce = true);

struct RoundContext {
  const TaskGroups* groups = nullptr;
  double alpha = 0.0;  // zero trains with plain gradients
  double beta = 0.0;
  int staleness_bound = 0;
  bool enforce_bound = true;
  ExecPolicy policy = ExecPolicy::serial;
};

// Local updates for every ES whose cache is stale: one personalized step per
// UE from the current global model, then edge aggregation.
void refresh_local_updates(HierarchyState& state, const RoundContext& ctx);

using Selector = std::function<SelectionVector(const HierarchyState&)>;

// One round: refresh local updates, ask `select` for the participating ESs,
// apply the global update and advance staleness.
SelectionVector run_round(HierarchyState& state, const RoundContext& ctx, const Selector& select);

}  // namespace hpfl
