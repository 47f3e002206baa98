#pragma once

#include <Eigen/Dense>

namespace hpfl {

// Flat model parameter vector shared by every update and aggregation rule.
using ParamVector = Eigen::VectorXd;

inline bool all_finite(const ParamVector& v) { return v.allFinite(); }

}  // namespace hpfl
