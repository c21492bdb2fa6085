// baseline_scheduler.hpp - rescheduling comparator: requests are packed to
// finish as soon as possible, and admitting a new request may rearrange the
// future allocations of everything already admitted (deadline-ordered
// earliest-first repack, which is feasibility-exact on one link). Transmitted
// history is never touched and admitted requests always keep their deadlines.
//
// Two departures from a naive as-soon-as-possible scheduler keep its
// admission set exactly aligned with the close-to-deadline scheduler, which
// the comparison harness depends on: the joint repack is adopted on every
// accept, not only when the incremental placement fails, and advance() tops
// up leftover current-slot capacity from future mass (incremental FCFS
// packing otherwise strands arrival-slot capacity and the two admission sets
// drift apart).
#pragma once

#include <algorithm>
#include <cassert>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rcd/core.hpp"
#include "rcd/link_scheduler.hpp"
#include "rcd/solver.hpp"

namespace rcd {

class BaselineScheduler {
 public:
  struct Admitted {
    Request request;
    double remaining = 0.0;
    double transmitted = 0.0;
  };

  explicit BaselineScheduler(double capacity, SlotIndex max_horizon = 0)
      : link_(capacity, max_horizon), current_spare_(capacity) {}

  SlotIndex t_now() const { return link_.t_now(); }
  const LinkState& link() const { return link_; }
  const SchedulerStats& stats() const { return stats_; }
  const std::map<std::string, Admitted>& admitted() const { return admitted_; }

  AdmissionResult submit(const Request& request) {
    if (request.id.empty() || request.volume <= 0.0)
      throw std::invalid_argument("submit: malformed request");
    if (request.arrival != t_now())
      throw std::invalid_argument("submit: request arrival must equal t_now");
    if (admitted_.count(request.id))
      throw std::invalid_argument("submit: duplicate request id " + request.id);
    if (request.deadline <= t_now())
      return record(AdmissionResult::reject(RejectReason::kPastDeadline));
    if (!link_.in_horizon(request.deadline))
      return record(AdmissionResult::reject(RejectReason::kHorizon));

    // Fast path: if the request fits the residual capacity as-is, the joint
    // problem is feasible with the current schedule as witness.
    LatestFirstProblem probe{request.volume, t_now(), request.deadline,
                             link_.residual_window(request.deadline)};
    if (!solve_earliest_first(probe).feasible) {
      double deficit = joint_deficit(request);
      if (deficit > 0.0)
        return record(
            AdmissionResult::reject(RejectReason::kInsufficientCapacity, deficit));
    }
    repack_with(request);
    admitted_[request.id] = Admitted{request, request.volume, 0.0};
    return record(AdmissionResult::accept(link_.ledger_entry(request.id)));
  }

  // Interface parity with LinkScheduler; the as-soon-as-possible packing
  // leaves nothing for a between-arrivals pull pass to do.
  std::vector<PullMove> pull_forward() { return {}; }

  SlotReport advance() {
    drain_into_current_slot();
    SlotReport report;
    report.slot = t_now();
    auto here = occupancy_.find(t_now());
    if (here != occupancy_.end()) {
      for (const auto& [deadline, id] : here->second) {
        Admitted& a = admitted_.at(id);
        AllocationProfile& profile = link_.ledger_entry(id);
        double amount = profile.amount_at(t_now());
        if (amount <= 0.0) continue;
        profile.remove(t_now(), amount);
        a.transmitted += amount;
        a.remaining -= amount;
        report.sent += amount;
      }
      occupancy_.erase(here);
    }
    for (auto it = admitted_.begin(); it != admitted_.end();) {
      if (it->second.remaining <= kEps) {
        sweep_dust(it->first, it->second.request.deadline);
        link_.erase_ledger(it->first);
        ++stats_.completed;
        it = admitted_.erase(it);
      } else {
        ++it;
      }
    }
    stats_.volume_sent += report.sent;
    report.utilization = report.sent / link_.capacity();
    report.accepted = slot_accepted_;
    report.rejected = slot_rejected_;
    slot_accepted_ = slot_rejected_ = 0;
    current_spare_ = link_.take_current_slot();
    return report;
  }

  bool invariants_hold(double eps = kEps) const {
    if (!link_.conservation_holds(eps)) return false;
    for (const auto& [id, a] : admitted_) {
      const AllocationProfile* profile = link_.find_ledger(id);
      double scheduled = profile ? profile->total() : 0.0;
      if (std::abs(scheduled - a.remaining) > eps) return false;
      if (a.transmitted > a.request.volume + eps) return false;
    }
    return true;
  }

 private:
  struct PackItem {
    SlotIndex deadline;
    std::string id;
    double volume;
  };

  // Worst capacity deficit of the joint schedule: for every deadline d the
  // movable demand due by d must fit in (t_now, d]. Only future allocations
  // count as movable; mass already at the current slot transmits regardless.
  double joint_deficit(const Request& request) const {
    std::vector<std::pair<SlotIndex, double>> items = movable_items();
    items.push_back({request.deadline, request.volume});
    double worst = 0.0;
    for (const auto& [d, v] : items) {
      double due = 0.0;
      for (const auto& [d2, v2] : items)
        if (d2 <= d) due += v2;
      double slack = link_.capacity() * static_cast<double>(d - t_now()) - due;
      if (slack < -kEps) worst = std::max(worst, -slack);
    }
    return worst;
  }

  std::vector<std::pair<SlotIndex, double>> movable_items() const {
    std::vector<std::pair<SlotIndex, double>> items;
    items.reserve(admitted_.size());
    for (const auto& [id, a] : admitted_) {
      const AllocationProfile* p = link_.find_ledger(id);
      double movable = p ? p->total_after(t_now()) : 0.0;
      if (movable > kZeroAmount) items.push_back({a.request.deadline, movable});
    }
    return items;
  }

  // Lifts every future allocation and lays the whole set back down
  // earliest-first in (deadline, id) order, the new request included.
  void repack_with(const Request& request) {
    std::vector<PackItem> items;
    items.reserve(admitted_.size() + 1);
    for (auto& [id, a] : admitted_) {
      AllocationProfile& profile = link_.ledger_entry(id);
      std::vector<std::pair<SlotIndex, double>> future;
      for (const auto& [slot, amount] : profile)
        if (slot > t_now()) future.push_back({slot, amount});
      double movable = 0.0;
      for (const auto& [slot, amount] : future) {
        profile.remove(slot, amount);
        link_.restore(slot, amount);
        erase_occupancy(slot, a.request.deadline, id);
        movable += amount;
      }
      if (movable > kZeroAmount) items.push_back({a.request.deadline, id, movable});
    }
    items.push_back({request.deadline, request.id, request.volume});
    std::sort(items.begin(), items.end(), [](const PackItem& a, const PackItem& b) {
      return std::tie(a.deadline, a.id) < std::tie(b.deadline, b.id);
    });
    for (const PackItem& item : items) {
      double left = item.volume;
      for (SlotIndex t = t_now() + 1; t <= item.deadline && left > kZeroAmount; ++t) {
        double cap = link_.residual_at(t);
        if (cap <= kZeroAmount) continue;
        double take = std::min(cap, left);
        link_.consume(t, take);
        link_.ledger_entry(item.id).add(t, take);
        occupancy_[t].insert({item.deadline, item.id});
        left -= take;
      }
      assert(left <= kEps);  // admission check guaranteed feasibility
    }
  }

  // Work conservation at the slot boundary: fill leftover current capacity
  // from the earliest future mass (ties by deadline, then id). Everything
  // older is already packed as early as it can be, so this only ever moves
  // traffic that arrived in the current slot.
  void drain_into_current_slot() {
    while (current_spare_ > kEps) {
      auto it = occupancy_.upper_bound(t_now());
      if (it == occupancy_.end()) break;
      SlotIndex s = it->first;
      auto [deadline, id] = *it->second.begin();
      AllocationProfile& profile = link_.ledger_entry(id);
      double take = std::min(profile.amount_at(s), current_spare_);
      if (take <= kZeroAmount) break;
      profile.remove(s, take);
      link_.restore(s, take);
      profile.add(t_now(), take);
      occupancy_[t_now()].insert({deadline, id});
      if (profile.amount_at(s) <= 0.0) erase_occupancy(s, deadline, id);
      current_spare_ -= take;
    }
  }

  // Sub-tolerance remnants of a finished request go back to the residuals so
  // the occupancy index never outlives the admitted entry.
  void sweep_dust(const std::string& id, SlotIndex deadline) {
    const AllocationProfile* profile = link_.find_ledger(id);
    if (!profile || profile->empty()) return;
    std::vector<std::pair<SlotIndex, double>> entries(profile->begin(), profile->end());
    for (const auto& [slot, amount] : entries) {
      if (slot > t_now()) link_.restore(slot, amount);
      erase_occupancy(slot, deadline, id);
    }
  }

  void erase_occupancy(SlotIndex slot, SlotIndex deadline, const std::string& id) {
    auto it = occupancy_.find(slot);
    if (it == occupancy_.end()) return;
    it->second.erase({deadline, id});
    if (it->second.empty()) occupancy_.erase(it);
  }

  AdmissionResult record(AdmissionResult r) {
    if (r.accepted) {
      ++stats_.accepted;
      ++slot_accepted_;
    } else {
      ++stats_.rejected;
      ++slot_rejected_;
    }
    return r;
  }

  LinkState link_;
  double current_spare_;
  std::map<std::string, Admitted> admitted_;
  std::map<SlotIndex, std::set<std::pair<SlotIndex, std::string>>> occupancy_;
  SchedulerStats stats_;
  int slot_accepted_ = 0;
  int slot_rejected_ = 0;
};

}  // namespace rcd
