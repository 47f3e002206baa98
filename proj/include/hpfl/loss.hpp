#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "hpfl/param.hpp"

namespace hpfl {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One UE's local dataset. `label_set` lists the classes the UE holds (its
// heterogeneity level is label_set.size()).
struct TaskShard {
  FeatureMatrix inputs;  // size() x feature dim
  std::vector<int> labels;
  std::vector<int> label_set;

  std::size_t size() const { return labels.size(); }
  // Throws std::invalid_argument when the shard is empty, rows are
  // non-finite or a label falls outside label_set.
  void validate() const;
};

// Loss f_i with gradient and exact Hessian-vector product. Implementations are
// stateless after construction and safe to share between threads.
class LossHandle {
 public:
  virtual ~LossHandle() = default;

  virtual std::size_t dim() const = 0;
  virtual double loss(const ParamVector& w, const TaskShard& shard) const = 0;
  virtual ParamVector grad(const ParamVector& w, const TaskShard& shard) const = 0;
  virtual ParamVector hvp(const ParamVector& w, const TaskShard& shard, const ParamVector& v) const = 0;

  // Classification accuracy on `shard`, or nullopt for regression-type losses.
  virtual std::optional<double> accuracy(const ParamVector&, const TaskShard&) const { return std::nullopt; }
};

// f(w) = 1/2 (w - a)^T Q (w - a). Ignores the shard contents.
class QuadraticLoss final : public LossHandle {
 public:
  QuadraticLoss(Eigen::MatrixXd q, ParamVector center);

  std::size_t dim() const override { return static_cast<std::size_t>(center_.size()); }
  double loss(const ParamVector& w, const TaskShard&) const override;
  ParamVector grad(const ParamVector& w, const TaskShard&) const override;
  ParamVector hvp(const ParamVector&, const TaskShard&, const ParamVector& v) const override;

  const Eigen::MatrixXd& q() const { return q_; }
  const ParamVector& center() const { return center_; }

 private:
  Eigen::MatrixXd q_;
  ParamVector center_;
};

// Multinomial logistic regression, parameters laid out as W (classes x
// features, row-major) followed by the bias vector. Mean cross-entropy plus
// an optional l2 term.
class SoftmaxRegressionLoss final : public LossHandle {
 public:
  SoftmaxRegressionLoss(int features, int classes, double l2 = 0.0);

  std::size_t dim() const override;
  double loss(const ParamVector& w, const TaskShard& shard) const override;
  ParamVector grad(const ParamVector& w, const TaskShard& shard) const override;
  ParamVector hvp(const ParamVector& w, const TaskShard& shard, const ParamVector& v) const override;
  std::optional<double> accuracy(const ParamVector& w, const TaskShard& shard) const override;

 private:
  int features_;
  int classes_;
  double l2_;
};

// One-hidden-layer tanh perceptron with softmax output. Layout: W1 (hidden x
// features), b1, W2 (classes x hidden), b2.
class MlpLoss final : public LossHandle {
 public:
  MlpLoss(int features, int hidden, int classes, double l2 = 0.0);

  std::size_t dim() const override;
  double loss(const ParamVector& w, const TaskShard& shard) const override;
  ParamVector grad(const ParamVector& w, const TaskShard& shard) const override;
  ParamVector hvp(const ParamVector& w, const TaskShard& shard, const ParamVector& v) const override;
  std::optional<double> accuracy(const ParamVector& w, const TaskShard& shard) const override;

 private:
  int features_;
  int hidden_;
  int classes_;
  double l2_;
};

}  // namespace hpfl
