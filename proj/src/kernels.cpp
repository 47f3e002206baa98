#include "hpfl/kernels.hpp"

#include <exception>
#include <utility>

#include "hpfl/error.hpp"

namespace hpfl {

namespace {

struct Job {
  int es;
  int ue;
  std::size_t slot;  // position of the ES in the caller's list
};

std::vector<Job> jobs_for(const TaskGroups& groups, const std::vector<int>& es_ids) {
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < es_ids.size(); ++s) {
    const auto& g = groups.at(static_cast<std::size_t>(es_ids[s]));
    for (std::size_t i = 0; i < g.size(); ++i) jobs.push_back({es_ids[s], static_cast<int>(i), s});
  }
  return jobs;
}

// Runs body(j) for every job; the first failure in job order is rethrown, with
// NumericalErrors tagged by the failing ES/UE.
template <typename Body>
void run_jobs(const std::vector<Job>& jobs, ExecPolicy policy, Body&& body) {
  const auto n = static_cast<long>(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  auto guarded = [&](long j) {
    try {
      body(static_cast<std::size_t>(j));
    } catch (const NumericalError& e) {
      errors[j] = std::make_exception_ptr(e.with_context(e.round(), jobs[j].es, jobs[j].ue));
    } catch (...) {
      errors[j] = std::current_exception();
    }
  };
  if (policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long j = 0; j < n; ++j) guarded(j);
  } else {
    for (long j = 0; j < n; ++j) guarded(j);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::vector<std::vector<ParamVector>> compute_meta_grads(const TaskGroups& groups, const std::vector<int>& es_ids,
                                                         const ParamVector& w, double alpha, ExecPolicy policy) {
  const auto jobs = jobs_for(groups, es_ids);
  std::vector<std::vector<ParamVector>> out(es_ids.size());
  for (std::size_t s = 0; s < es_ids.size(); ++s) out[s].resize(groups.at(static_cast<std::size_t>(es_ids[s])).size());
  run_jobs(jobs, policy, [&](std::size_t j) {
    const auto& job = jobs[j];
    const UeTask& t = groups[job.es][job.ue];
    out[job.slot][job.ue] = meta_grad(*t.loss, w, t.train, alpha);
  });
  return out;
}

Evaluation evaluate(const TaskGroups& groups, const ParamVector& w, double loss_alpha, double adapt_alpha,
                    ExecPolicy policy) {
  std::vector<int> all(groups.size());
  for (std::size_t k = 0; k < groups.size(); ++k) all[k] = static_cast<int>(k);
  const auto jobs = jobs_for(groups, all);
  std::vector<double> losses(jobs.size()), accs(jobs.size());
  std::vector<char> has_acc(jobs.size(), 0);
  run_jobs(jobs, policy, [&](std::size_t j) {
    const UeTask& t = groups[jobs[j].es][jobs[j].ue];
    losses[j] = meta_loss(*t.loss, w, t.train, loss_alpha);
    ParamVector adapted = w;
    if (adapt_alpha > 0.0) adapted = w - adapt_alpha * t.loss->grad(w, t.train);
    if (auto a = t.loss->accuracy(adapted, t.test)) {
      accs[j] = *a;
      has_acc[j] = 1;
    }
  });

  // Equal weight per ES, equal weight per UE within an ES.
  Evaluation ev;
  std::size_t j = 0, acc_count = 0;
  double acc_sum = 0.0;
  for (const auto& g : groups) {
    double es_loss = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i, ++j) {
      es_loss += losses[j];
      if (has_acc[j]) {
        acc_sum += accs[j];
        ++acc_count;
      }
    }
    ev.train_loss += es_loss / static_cast<double>(g.size());
  }
  ev.train_loss /= static_cast<double>(groups.size());
  ev.has_accuracy = acc_count > 0;
  if (ev.has_accuracy) ev.accuracy = acc_sum / static_cast<double>(acc_count);
  return ev;
}

ParamVector global_meta_grad(const TaskGroups& groups, const ParamVector& w, double alpha, ExecPolicy policy) {
  std::vector<int> all(groups.size());
  for (std::size_t k = 0; k < groups.size(); ++k) all[k] = static_cast<int>(k);
  const auto grads = compute_meta_grads(groups, all, w, alpha, policy);
  ParamVector sum = ParamVector::Zero(w.size());
  for (const auto& es : grads) {
    ParamVector m = ParamVector::Zero(w.size());
    for (const auto& g : es) m += g;
    sum += m / static_cast<double>(es.size());
  }
  return sum / static_cast<double>(grads.size());
}

}  // namespace hpfl
