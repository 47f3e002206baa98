#pragma once

#include <vector>

#include "hpfl/param.hpp"
#include "hpfl/pfl.hpp"

namespace hpfl {

// Serial is the reference path; parallel spreads UEs over OpenMP threads and
// must agree with it bit for bit.
enum class ExecPolicy { serial, parallel };

// Meta-gradients (alpha = 0 gives plain gradients) of every UE under the listed
// edge servers, all at model w. Result is indexed [position in es_ids][ue].
std::vector<std::vector<ParamVector>> compute_meta_grads(const TaskGroups& groups, const std::vector<int>& es_ids,
                                                         const ParamVector& w, double alpha, ExecPolicy policy);

struct Evaluation {
  double train_loss = 0.0;  // mean over UEs of F (or f when alpha = 0) on training shards
  double accuracy = 0.0;    // mean over UEs of held-out accuracy after one alpha step
  bool has_accuracy = false;
};

// adapt_alpha is the personalization step used for accuracy; loss_alpha the
// one inside the reported training objective.
Evaluation evaluate(const TaskGroups& groups, const ParamVector& w, double loss_alpha, double adapt_alpha,
                    ExecPolicy policy);

// Mean over UEs of grad F(w), in fixed order.
ParamVector global_meta_grad(const TaskGroups& groups, const ParamVector& w, double alpha, ExecPolicy policy);

}  // namespace hpfl
