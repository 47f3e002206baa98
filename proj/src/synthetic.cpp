#include "hpfl/synthetic.hpp"

#include <algorithm>
#include <stdexcept>

#include "hpfl/rng.hpp"

namespace hpfl {

namespace {

TaskShard sample_shard(Rng& rng, const std::vector<ParamVector>& means, const std::vector<int>& label_set, int n,
                       double noise) {
  const auto features = means.front().size();
  TaskShard shard;
  shard.inputs.resize(n, features);
  shard.labels.resize(static_cast<std::size_t>(n));
  shard.label_set = label_set;
  for (int s = 0; s < n; ++s) {
    const int y = label_set[rng.index(label_set.size())];
    shard.labels[static_cast<std::size_t>(s)] = y;
    for (Eigen::Index f = 0; f < features; ++f) shard.inputs(s, f) = means[static_cast<std::size_t>(y)][f] + noise * rng.normal();
  }
  return shard;
}

}  // namespace

std::size_t model_dim(const SyntheticTaskConfig& cfg) {
  if (cfg.family == "quadratic") return static_cast<std::size_t>(cfg.features);
  if (cfg.model == "mlp")
    return static_cast<std::size_t>(cfg.hidden) * (cfg.features + 1) +
           static_cast<std::size_t>(cfg.classes) * (cfg.hidden + 1);
  return static_cast<std::size_t>(cfg.classes) * (cfg.features + 1);
}

TaskGroups make_tasks(const SyntheticTaskConfig& cfg, const std::vector<int>& ues_per_es, std::uint64_t seed) {
  if (cfg.samples_min < 1 || cfg.samples_max < cfg.samples_min)
    throw std::invalid_argument("synthetic tasks: need 1 <= samples_min <= samples_max");
  Rng rng(derive_seed(seed, {0x7a5c}));
  TaskGroups groups(ues_per_es.size());

  if (cfg.family == "quadratic") {
    const int d = cfg.features;
    for (std::size_t k = 0; k < ues_per_es.size(); ++k) {
      for (int i = 0; i < ues_per_es[k]; ++i) {
        Eigen::MatrixXd a(d, d);
        for (int r = 0; r < d; ++r)
          for (int c = 0; c < d; ++c) a(r, c) = rng.normal();
        Eigen::MatrixXd q = a.transpose() * a / static_cast<double>(d) + 0.1 * Eigen::MatrixXd::Identity(d, d);
        ParamVector center(d);
        for (int r = 0; r < d; ++r) center[r] = cfg.separation * rng.normal();
        const int n = cfg.samples_min + static_cast<int>(rng.index(static_cast<std::size_t>(cfg.samples_max - cfg.samples_min + 1)));
        UeTask task;
        task.loss = std::make_shared<QuadraticLoss>(std::move(q), std::move(center));
        // Placeholder data only sizes the compute-latency model.
        task.train.inputs = FeatureMatrix::Zero(n, d);
        task.train.labels.assign(static_cast<std::size_t>(n), 0);
        task.train.label_set = {0};
        task.test = task.train;
        groups[k].push_back(std::move(task));
      }
    }
    return groups;
  }

  if (cfg.family != "gaussian_mixture") throw std::invalid_argument("unknown task family '" + cfg.family + "'");
  if (cfg.heterogeneity < 1 || cfg.heterogeneity > cfg.classes)
    throw std::invalid_argument("heterogeneity must be in [1, classes]");

  std::shared_ptr<const LossHandle> loss;
  if (cfg.model == "mlp") {
    loss = std::make_shared<MlpLoss>(cfg.features, cfg.hidden, cfg.classes, cfg.l2);
  } else if (cfg.model == "softmax") {
    loss = std::make_shared<SoftmaxRegressionLoss>(cfg.features, cfg.classes, cfg.l2);
  } else {
    throw std::invalid_argument("unknown model '" + cfg.model + "'");
  }

  std::vector<ParamVector> means(static_cast<std::size_t>(cfg.classes), ParamVector(cfg.features));
  for (auto& m : means)
    for (Eigen::Index f = 0; f < m.size(); ++f) m[f] = cfg.separation * rng.normal();

  for (std::size_t k = 0; k < ues_per_es.size(); ++k) {
    for (int i = 0; i < ues_per_es[k]; ++i) {
      std::vector<int> labels;
      for (std::size_t c : rng.sample(static_cast<std::size_t>(cfg.classes), static_cast<std::size_t>(cfg.heterogeneity)))
        labels.push_back(static_cast<int>(c));
      std::sort(labels.begin(), labels.end());
      const int n = cfg.samples_min + static_cast<int>(rng.index(static_cast<std::size_t>(cfg.samples_max - cfg.samples_min + 1)));
      UeTask task;
      task.loss = loss;
      task.train = sample_shard(rng, means, labels, n, cfg.noise);
      task.test = sample_shard(rng, means, labels, cfg.test_samples, cfg.noise);
      groups[k].push_back(std::move(task));
    }
  }
  return groups;
}

ParamVector initial_model(std::size_t dim, std::uint64_t seed, double scale) {
  Rng rng(derive_seed(seed, {0x1417}));
  ParamVector w(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = scale * rng.normal();
  return w;
}

}  // namespace hpfl
