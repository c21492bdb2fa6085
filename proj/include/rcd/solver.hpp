// solver.hpp - single-link allocation kernel. The admission-time problem is
// a tiny linear program: place volume Q in slots (t_now, td] under per-slot
// residual capacities, minimizing sum E(t) * (td - t). Its exact optimum is
// the greedy backward fill: take the deadline slot first, then walk toward
// the present until Q is exhausted.
#pragma once

#include <cstddef>
#include <vector>

#include "rcd/core.hpp"

namespace rcd {

// One single-link allocation problem over the window (t_now, td].
// residual[i] is the free capacity of slot t_now + 1 + i.
struct LatestFirstProblem {
  double volume = 0.0;
  SlotIndex t_now = 0;
  SlotIndex td = 0;
  std::vector<double> residual;

  bool well_formed() const {
    if (volume <= 0.0 || td <= t_now) return false;
    if (residual.size() != static_cast<std::size_t>(td - t_now)) return false;
    for (double r : residual)
      if (r < -kEps) return false;
    return true;
  }
};

struct LatestFirstResult {
  bool feasible = false;
  AllocationProfile profile;   // set when feasible
  double shortfall = 0.0;      // volume - window capacity, when infeasible

  // Cost of the found profile under the close-to-deadline objective,
  // sum of amount * (td - slot).
  double objective(SlotIndex td) const {
    double cost = 0.0;
    for (const auto& [slot, amount] : profile)
      cost += amount * static_cast<double>(td - slot);
    return cost;
  }
};

// Exact minimizer of the latest-first objective. Infeasible iff the window
// residual total falls short of Q by more than kEps.
inline LatestFirstResult solve_latest_first(const LatestFirstProblem& p) {
  if (!p.well_formed()) throw std::invalid_argument("solve_latest_first: malformed problem");
  LatestFirstResult result;
  double total = 0.0;
  for (double r : p.residual) total += r;
  if (total < p.volume - kEps) {
    result.feasible = false;
    result.shortfall = p.volume - total;
    return result;
  }
  result.feasible = true;
  double remaining = p.volume;
  for (SlotIndex t = p.td; t > p.t_now && remaining > kZeroAmount; --t) {
    double cap = p.residual[static_cast<std::size_t>(t - p.t_now - 1)];
    if (cap <= kZeroAmount) continue;
    double take = std::min(cap, remaining);
    result.profile.add(t, take);
    remaining -= take;
  }
  return result;
}

// Mirror image of solve_latest_first: fill from the earliest slot. Used by
// the rescheduling baseline for its as-soon-as-possible placement.
inline LatestFirstResult solve_earliest_first(const LatestFirstProblem& p) {
  if (!p.well_formed()) throw std::invalid_argument("solve_earliest_first: malformed problem");
  LatestFirstResult result;
  double total = 0.0;
  for (double r : p.residual) total += r;
  if (total < p.volume - kEps) {
    result.feasible = false;
    result.shortfall = p.volume - total;
    return result;
  }
  result.feasible = true;
  double remaining = p.volume;
  for (SlotIndex t = p.t_now + 1; t <= p.td && remaining > kZeroAmount; ++t) {
    double cap = p.residual[static_cast<std::size_t>(t - p.t_now - 1)];
    if (cap <= kZeroAmount) continue;
    double take = std::min(cap, remaining);
    result.profile.add(t, take);
    remaining -= take;
  }
  return result;
}

}  // namespace rcd
