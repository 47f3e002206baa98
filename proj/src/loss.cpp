#include "hpfl/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dual.hpp"

namespace hpfl {

using detail::Dual;
using detail::value;
using std::exp;
using std::log;
using std::tanh;
using detail::exp;
using detail::log;
using detail::tanh;

void TaskShard::validate() const {
  if (labels.empty()) throw std::invalid_argument("task shard is empty");
  if (static_cast<std::size_t>(inputs.rows()) != labels.size())
    throw std::invalid_argument("task shard has " + std::to_string(inputs.rows()) + " rows but " +
                                std::to_string(labels.size()) + " labels");
  if (!inputs.allFinite()) throw std::invalid_argument("task shard has non-finite features");
  for (int y : labels) {
    if (std::find(label_set.begin(), label_set.end(), y) == label_set.end())
      throw std::invalid_argument("label " + std::to_string(y) + " outside the shard's label set");
  }
}

QuadraticLoss::QuadraticLoss(Eigen::MatrixXd q, ParamVector center) : q_(std::move(q)), center_(std::move(center)) {
  if (q_.rows() != q_.cols() || q_.rows() != center_.size())
    throw std::invalid_argument("quadratic loss: Q must be square and match the center dimension");
}

double QuadraticLoss::loss(const ParamVector& w, const TaskShard&) const {
  const ParamVector r = w - center_;
  return 0.5 * r.dot(q_ * r);
}

ParamVector QuadraticLoss::grad(const ParamVector& w, const TaskShard&) const { return q_ * (w - center_); }

ParamVector QuadraticLoss::hvp(const ParamVector&, const TaskShard&, const ParamVector& v) const { return q_ * v; }

namespace {

// Numerically stable softmax cross-entropy on logits z for label y. Writes
// dL/dz into dz when non-null and returns the loss.
template <class T>
T softmax_xent(const std::vector<T>& z, int y, std::vector<T>* dz) {
  const int classes = static_cast<int>(z.size());
  int top = 0;
  for (int c = 1; c < classes; ++c)
    if (value(z[c]) > value(z[top])) top = c;
  const T shift = z[top];
  T sum = T(0.0);
  std::vector<T> e(classes);
  for (int c = 0; c < classes; ++c) {
    e[c] = exp(z[c] - shift);
    sum += e[c];
  }
  if (dz) {
    for (int c = 0; c < classes; ++c) (*dz)[c] = e[c] / sum - T(c == y ? 1.0 : 0.0);
  }
  return log(sum) + shift - z[y];
}

template <class T>
T softmax_regression(const T* w, const TaskShard& shard, int features, int classes, double l2, T* g) {
  const std::size_t dim = static_cast<std::size_t>(classes) * (features + 1);
  const T* bias = w + static_cast<std::ptrdiff_t>(classes) * features;
  if (g) std::fill(g, g + dim, T(0.0));
  std::vector<T> z(classes), dz(classes);
  T total = T(0.0);
  const std::size_t n = shard.size();
  for (std::size_t s = 0; s < n; ++s) {
    const double* x = shard.inputs.row(static_cast<Eigen::Index>(s)).data();
    for (int c = 0; c < classes; ++c) {
      T acc = bias[c];
      const T* row = w + static_cast<std::ptrdiff_t>(c) * features;
      for (int f = 0; f < features; ++f) acc += row[f] * T(x[f]);
      z[c] = acc;
    }
    total += softmax_xent(z, shard.labels[s], g ? &dz : nullptr);
    if (g) {
      for (int c = 0; c < classes; ++c) {
        T* grow = g + static_cast<std::ptrdiff_t>(c) * features;
        for (int f = 0; f < features; ++f) grow[f] += dz[c] * T(x[f]);
        g[static_cast<std::ptrdiff_t>(classes) * features + c] += dz[c];
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  total = total * T(inv_n);
  if (g) {
    for (std::size_t i = 0; i < dim; ++i) g[i] = g[i] * T(inv_n);
  }
  if (l2 > 0.0) {
    T sq = T(0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      sq += w[i] * w[i];
      if (g) g[i] += T(l2) * w[i];
    }
    total += T(0.5 * l2) * sq;
  }
  return total;
}

template <class T>
T mlp(const T* w, const TaskShard& shard, int features, int hidden, int classes, double l2, T* g) {
  const std::ptrdiff_t o_b1 = static_cast<std::ptrdiff_t>(hidden) * features;
  const std::ptrdiff_t o_w2 = o_b1 + hidden;
  const std::ptrdiff_t o_b2 = o_w2 + static_cast<std::ptrdiff_t>(classes) * hidden;
  const std::size_t dim = static_cast<std::size_t>(o_b2 + classes);
  if (g) std::fill(g, g + dim, T(0.0));
  std::vector<T> h(hidden), z(classes), dz(classes), da(hidden);
  T total = T(0.0);
  const std::size_t n = shard.size();
  for (std::size_t s = 0; s < n; ++s) {
    const double* x = shard.inputs.row(static_cast<Eigen::Index>(s)).data();
    for (int j = 0; j < hidden; ++j) {
      T acc = w[o_b1 + j];
      const T* row = w + static_cast<std::ptrdiff_t>(j) * features;
      for (int f = 0; f < features; ++f) acc += row[f] * T(x[f]);
      h[j] = tanh(acc);
    }
    for (int c = 0; c < classes; ++c) {
      T acc = w[o_b2 + c];
      const T* row = w + o_w2 + static_cast<std::ptrdiff_t>(c) * hidden;
      for (int j = 0; j < hidden; ++j) acc += row[j] * h[j];
      z[c] = acc;
    }
    total += softmax_xent(z, shard.labels[s], g ? &dz : nullptr);
    if (!g) continue;
    for (int j = 0; j < hidden; ++j) da[j] = T(0.0);
    for (int c = 0; c < classes; ++c) {
      T* grow = g + o_w2 + static_cast<std::ptrdiff_t>(c) * hidden;
      const T* row = w + o_w2 + static_cast<std::ptrdiff_t>(c) * hidden;
      for (int j = 0; j < hidden; ++j) {
        grow[j] += dz[c] * h[j];
        da[j] += row[j] * dz[c];
      }
      g[o_b2 + c] += dz[c];
    }
    for (int j = 0; j < hidden; ++j) {
      const T local = da[j] * (T(1.0) - h[j] * h[j]);
      T* grow = g + static_cast<std::ptrdiff_t>(j) * features;
      for (int f = 0; f < features; ++f) grow[f] += local * T(x[f]);
      g[o_b1 + j] += local;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  total = total * T(inv_n);
  if (g) {
    for (std::size_t i = 0; i < dim; ++i) g[i] = g[i] * T(inv_n);
  }
  if (l2 > 0.0) {
    T sq = T(0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      sq += w[i] * w[i];
      if (g) g[i] += T(l2) * w[i];
    }
    total += T(0.5 * l2) * sq;
  }
  return total;
}

void check_dim(const ParamVector& w, std::size_t dim, const char* who) {
  if (static_cast<std::size_t>(w.size()) != dim)
    throw std::invalid_argument(std::string(who) + ": parameter dimension " + std::to_string(w.size()) +
                                " != " + std::to_string(dim));
}

// Evaluates `kernel` on dual inputs (w + eps v) and returns the tangent of
// the gradient, i.e. H(w) v.
template <class Kernel>
ParamVector dual_hvp(const ParamVector& w, const ParamVector& v, Kernel&& kernel) {
  const auto dim = static_cast<std::size_t>(w.size());
  std::vector<Dual> wd(dim), gd(dim);
  for (std::size_t i = 0; i < dim; ++i) wd[i] = Dual(w[static_cast<Eigen::Index>(i)], v[static_cast<Eigen::Index>(i)]);
  kernel(wd.data(), gd.data());
  ParamVector out(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) out[static_cast<Eigen::Index>(i)] = gd[i].d;
  return out;
}

template <class Logits>
double argmax_accuracy(const TaskShard& shard, int classes, Logits&& logits) {
  std::vector<double> z(classes);
  std::size_t hits = 0;
  for (std::size_t s = 0; s < shard.size(); ++s) {
    logits(shard.inputs.row(static_cast<Eigen::Index>(s)).data(), z);
    const auto best = std::max_element(z.begin(), z.end()) - z.begin();
    if (best == shard.labels[s]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(shard.size());
}

}  // namespace

SoftmaxRegressionLoss::SoftmaxRegressionLoss(int features, int classes, double l2)
    : features_(features), classes_(classes), l2_(l2) {
  if (features < 1 || classes < 2) throw std::invalid_argument("softmax regression: need features >= 1, classes >= 2");
}

std::size_t SoftmaxRegressionLoss::dim() const { return static_cast<std::size_t>(classes_) * (features_ + 1); }

double SoftmaxRegressionLoss::loss(const ParamVector& w, const TaskShard& shard) const {
  check_dim(w, dim(), "softmax regression");
  return softmax_regression<double>(w.data(), shard, features_, classes_, l2_, nullptr);
}

ParamVector SoftmaxRegressionLoss::grad(const ParamVector& w, const TaskShard& shard) const {
  check_dim(w, dim(), "softmax regression");
  ParamVector g(static_cast<Eigen::Index>(dim()));
  softmax_regression<double>(w.data(), shard, features_, classes_, l2_, g.data());
  return g;
}

ParamVector SoftmaxRegressionLoss::hvp(const ParamVector& w, const TaskShard& shard, const ParamVector& v) const {
  check_dim(w, dim(), "softmax regression");
  check_dim(v, dim(), "softmax regression hvp direction");
  return dual_hvp(w, v, [&](const Dual* wd, Dual* gd) {
    softmax_regression<Dual>(wd, shard, features_, classes_, l2_, gd);
  });
}

std::optional<double> SoftmaxRegressionLoss::accuracy(const ParamVector& w, const TaskShard& shard) const {
  check_dim(w, dim(), "softmax regression");
  const double* bias = w.data() + static_cast<std::ptrdiff_t>(classes_) * features_;
  return argmax_accuracy(shard, classes_, [&](const double* x, std::vector<double>& z) {
    for (int c = 0; c < classes_; ++c) {
      double acc = bias[c];
      const double* row = w.data() + static_cast<std::ptrdiff_t>(c) * features_;
      for (int f = 0; f < features_; ++f) acc += row[f] * x[f];
      z[c] = acc;
    }
  });
}

MlpLoss::MlpLoss(int features, int hidden, int classes, double l2)
    : features_(features), hidden_(hidden), classes_(classes), l2_(l2) {
  if (features < 1 || hidden < 1 || classes < 2) throw std::invalid_argument("mlp: invalid layer sizes");
}

std::size_t MlpLoss::dim() const {
  return static_cast<std::size_t>(hidden_) * (features_ + 1) + static_cast<std::size_t>(classes_) * (hidden_ + 1);
}

double MlpLoss::loss(const ParamVector& w, const TaskShard& shard) const {
  check_dim(w, dim(), "mlp");
  return mlp<double>(w.data(), shard, features_, hidden_, classes_, l2_, nullptr);
}

ParamVector MlpLoss::grad(const ParamVector& w, const TaskShard& shard) const {
  check_dim(w, dim(), "mlp");
  ParamVector g(static_cast<Eigen::Index>(dim()));
  mlp<double>(w.data(), shard, features_, hidden_, classes_, l2_, g.data());
  return g;
}

ParamVector MlpLoss::hvp(const ParamVector& w, const TaskShard& shard, const ParamVector& v) const {
  check_dim(w, dim(), "mlp");
  check_dim(v, dim(), "mlp hvp direction");
  return dual_hvp(w, v, [&](const Dual* wd, Dual* gd) {
    mlp<Dual>(wd, shard, features_, hidden_, classes_, l2_, gd);
  });
}

std::optional<double> MlpLoss::accuracy(const ParamVector& w, const TaskShard& shard) const {
  check_dim(w, dim(), "mlp");
  const std::ptrdiff_t o_b1 = static_cast<std::ptrdiff_t>(hidden_) * features_;
  const std::ptrdiff_t o_w2 = o_b1 + hidden_;
  const std::ptrdiff_t o_b2 = o_w2 + static_cast<std::ptrdiff_t>(classes_) * hidden_;
  std::vector<double> h(hidden_);
  return argmax_accuracy(shard, classes_, [&](const double* x, std::vector<double>& z) {
    for (int j = 0; j < hidden_; ++j) {
      double acc = w[o_b1 + j];
      for (int f = 0; f < features_; ++f) acc += w[static_cast<Eigen::Index>(j) * features_ + f] * x[f];
      h[j] = std::tanh(acc);
    }
    for (int c = 0; c < classes_; ++c) {
      double acc = w[o_b2 + c];
      for (int j = 0; j < hidden_; ++j) acc += w[o_w2 + static_cast<Eigen::Index>(c) * hidden_ + j] * h[j];
      z[c] = acc;
    }
  });
}

}  // namespace hpfl
