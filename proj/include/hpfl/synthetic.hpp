#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hpfl/pfl.hpp"

namespace hpfl {

struct SyntheticTaskConfig {
  std::string family = "gaussian_mixture";  // gaussian_mixture | quadratic
  std::string model = "softmax";            // softmax | mlp (gaussian_mixture only)
  int features = 10;
  int hidden = 8;
  int classes = 10;
  double separation = 1.0;  // scale of the class means
  double noise = 1.0;       // per-feature noise around a class mean
  int samples_min = 40;
  int samples_max = 80;
  int test_samples = 40;
  int heterogeneity = 2;  // labels per UE
  double l2 = 0.0;

  bool operator==(const SyntheticTaskConfig&) const = default;
};

// Builds one UeTask per UE. Gaussian-mixture UEs draw `heterogeneity` distinct
// labels uniformly and sample train and test data from those classes only.
// Quadratic UEs get their own random positive-definite bowl.
TaskGroups make_tasks(const SyntheticTaskConfig& cfg, const std::vector<int>& ues_per_es, std::uint64_t seed);

std::size_t model_dim(const SyntheticTaskConfig& cfg);

// Small random initial model.
ParamVector initial_model(std::size_t dim, std::uint64_t seed, double scale = 0.01);

}  // namespace hpfl
