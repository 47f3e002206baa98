#pragma once

#include <numeric>
#include <vector>

namespace hpfl {

// Per-round edge-server scheduling decision: pi[k] == 1 when ES k contributes
// to the global update.
struct SelectionVector {
  std::vector<int> pi;

  SelectionVector() = default;
  explicit SelectionVector(std::vector<int> p) : pi(std::move(p)) {}
  static SelectionVector all(std::size_t k) { return SelectionVector(std::vector<int>(k, 1)); }
  static SelectionVector none(std::size_t k) { return SelectionVector(std::vector<int>(k, 0)); }

  std::size_t size() const { return pi.size(); }
  bool selected(std::size_t k) const { return pi[k] != 0; }
  int a_effective() const { return std::accumulate(pi.begin(), pi.end(), 0); }

  bool operator==(const SelectionVector&) const = default;
};

}  // namespace hpfl
