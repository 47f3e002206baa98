#pragma once

#include <vector>

namespace hpfl {

// Ranks with ties sharing their average rank, 1-based.
std::vector<double> average_ranks(const std::vector<double>& x);
double pearson(const std::vector<double>& x, const std::vector<double>& y);
double spearman(const std::vector<double>& x, const std::vector<double>& y);
// Least-squares slope of y on x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);
// One-sided sign test: P(X >= wins) for X ~ Binomial(n, 1/2).
double sign_test_p(int wins, int n);

}  // namespace hpfl
