#pragma once

#include <stdexcept>
#include <string>

namespace hpfl {

// Scenario or argument validation failure. `field` names the offending key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// No bandwidth allocation can satisfy the requested latency or budget.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A loss, gradient or update produced a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, int round = -1, int es = -1, int ue = -1)
      : std::runtime_error(format(what, round, es, ue)), detail_(what), round_(round), es_(es), ue_(ue) {}

  NumericalError with_context(int round, int es, int ue) const { return NumericalError(detail_, round, es, ue); }

  int round() const noexcept { return round_; }
  int es() const noexcept { return es_; }
  int ue() const noexcept { return ue_; }

 private:
  static std::string format(const std::string& what, int round, int es, int ue) {
    if (round < 0 && es < 0 && ue < 0) return what;
    return what + " (round " + std::to_string(round) + ", es " + std::to_string(es) + ", ue " +
           std::to_string(ue) + ")";
  }

  std::string detail_;
  int round_;
  int es_;
  int ue_;
};

// An edge server would exceed the staleness bound S.
class StalenessOverflow : public std::runtime_error {
 public:
  StalenessOverflow(int es_id, int staleness, int bound)
      : std::runtime_error("edge server " + std::to_string(es_id) + " staleness " + std::to_string(staleness) +
                           " exceeds bound " + std::to_string(bound)),
        es_id_(es_id) {}
  int es_id() const noexcept { return es_id_; }

 private:
  int es_id_;
};

}  // namespace hpfl
