// generators.hpp - deterministic random instances for property-style tests.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rcd/core.hpp"
#include "rcd/solver.hpp"
#include "support/oracles.hpp"

namespace rcd::testsupport {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int uniform_int(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline LatestFirstProblem random_latest_first_problem(Gen& gen, int max_slots = 12) {
  LatestFirstProblem p;
  p.t_now = gen.uniform_int(0, 3);
  int slots = gen.uniform_int(1, max_slots);
  p.td = p.t_now + slots;
  p.residual.resize(static_cast<std::size_t>(slots));
  double total = 0.0;
  for (double& r : p.residual) {
    r = gen.chance(0.15) ? 0.0 : gen.uniform(0.0, 1.0);
    total += r;
  }
  // Mix feasible and boundary demands.
  p.volume = gen.chance(0.8) ? gen.uniform(0.01, std::max(0.02, total))
                             : gen.uniform(0.01, total + 1.0);
  return p;
}

inline std::vector<OracleItem> random_admitted_set(Gen& gen, int max_requests,
                                                   int max_slots) {
  int count = gen.uniform_int(1, max_requests);
  std::vector<OracleItem> items;
  for (int i = 0; i < count; ++i) {
    OracleItem item;
    item.deadline = gen.uniform_int(1, max_slots);
    item.volume = gen.uniform(0.05, 1.2);
    items.push_back(item);
  }
  return items;
}

}  // namespace rcd::testsupport
