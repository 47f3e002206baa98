#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace hpfl {

// Mixes a base seed with stream tags so that (seed, round, purpose) triples map
// to independent generators.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

// Portable generator: mt19937_64 is fully specified by the standard, and all
// distributions below are implemented here rather than through <random>'s
// implementation-defined ones, so streams agree across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double exponential();  // unit mean
  std::size_t index(std::size_t n);  // uniform in [0, n)
  // k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace hpfl
