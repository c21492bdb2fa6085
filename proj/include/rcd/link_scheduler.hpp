// link_scheduler.hpp - single-link close-to-deadline scheduler. Requests are
// admitted on arrival with a latest-first profile; each slot, spare current
// capacity is filled by pulling the earliest scheduled future traffic
// forward. Admitted requests are never preempted.
#pragma once

#include <cassert>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rcd/core.hpp"
#include "rcd/solver.hpp"

namespace rcd {

enum class RejectReason {
  kNone,
  kInsufficientCapacity,
  kPastDeadline,
  kHorizon,
  kNoPath,
};

inline const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::kNone: return "none";
    case RejectReason::kInsufficientCapacity: return "insufficient_capacity";
    case RejectReason::kPastDeadline: return "past_deadline";
    case RejectReason::kHorizon: return "horizon";
    case RejectReason::kNoPath: return "no_path";
  }
  return "unknown";
}

struct AdmissionResult {
  bool accepted = false;
  RejectReason reason = RejectReason::kNone;
  AllocationProfile profile;  // set on accept
  double shortfall = 0.0;     // set on capacity rejection

  static AdmissionResult accept(AllocationProfile p) {
    return AdmissionResult{true, RejectReason::kNone, std::move(p), 0.0};
  }
  static AdmissionResult reject(RejectReason why, double shortfall = 0.0) {
    return AdmissionResult{false, why, {}, shortfall};
  }
};

// Per-slot outcome emitted by advance().
struct SlotReport {
  SlotIndex slot = 0;
  double sent = 0.0;
  double utilization = 0.0;
  int accepted = 0;
  int rejected = 0;
  int cancelled_reservations = 0;
};

struct PullMove {
  std::string id;
  double amount = 0.0;
};

struct SchedulerStats {
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t completed = 0;
  std::int64_t cancelled_reservations = 0;
  double volume_sent = 0.0;
};

// Single-writer scheduler state machine over one link.
class LinkScheduler {
 public:
  struct Admitted {
    Request request;
    double remaining = 0.0;
    double transmitted = 0.0;
    bool content_available = true;
  };

  explicit LinkScheduler(double capacity, SlotIndex max_horizon = 0)
      : link_(capacity, max_horizon), current_spare_(capacity) {}

  explicit LinkScheduler(LinkState link)
      : link_(std::move(link)), current_spare_(link_.capacity()) {}

  SlotIndex t_now() const { return link_.t_now(); }
  const LinkState& link() const { return link_; }
  const SchedulerStats& stats() const { return stats_; }
  double current_spare() const { return current_spare_; }

  const std::map<std::string, Admitted>& admitted() const { return admitted_; }

  // Admission on arrival. Accepts iff the residual capacity in
  // (t_now, deadline] covers the volume; the latest-first profile is then
  // written to the ledger. Never reshuffles existing allocations.
  AdmissionResult submit(const Request& request) {
    if (request.kind != RequestKind::kElastic)
      throw std::invalid_argument("submit: use reserve() for reservations");
    return admit(request, /*content_available=*/true);
  }

  // Same admission as submit, but the allocated bandwidth is held for
  // content that has not arrived yet. Until mark_content_available() the
  // mass is not transmittable; if the reservation can no longer finish by
  // its deadline it is cancelled and its bandwidth freed.
  AdmissionResult reserve(const Request& request) {
    if (request.kind != RequestKind::kReservation)
      throw std::invalid_argument("reserve: request kind must be reservation");
    return admit(request, /*content_available=*/false);
  }

  bool mark_content_available(const std::string& id) {
    auto it = admitted_.find(id);
    if (it == admitted_.end()) return false;
    it->second.content_available = true;
    return true;
  }

  // Rule 2: while the current slot has spare capacity, move traffic here
  // from the earliest non-empty future slot. Reservations whose content has
  // not arrived are skipped; their encountered mass is re-allocated
  // latest-first within their remaining window so later elastic traffic can
  // come forward.
  std::vector<PullMove> pull_forward() {
    std::vector<PullMove> moves;
    settle_unavailable_reservations(/*credit_spare=*/true);
    // Fetch phase: skip over reservations whose content is missing and pull
    // from the next closest request instead.
    std::vector<std::pair<std::string, SlotIndex>> skipped;
    std::set<std::string> skipped_seen;
    while (current_spare_ > kEps) {
      // Scan for the next pullable allocation, then mutate: pulling erases
      // occupancy entries, so nothing from the scan may stay borrowed.
      std::string candidate;
      SlotIndex candidate_slot = 0;
      bool found = false;
      for (auto slot_it = occupancy_.upper_bound(t_now());
           slot_it != occupancy_.end() && !found; ++slot_it) {
        for (const auto& [deadline, id] : slot_it->second) {
          if (!admitted_.at(id).content_available) {
            if (skipped_seen.insert(id).second) skipped.push_back({id, slot_it->first});
            continue;
          }
          candidate = id;
          candidate_slot = slot_it->first;
          found = true;
          break;
        }
      }
      if (!found) break;
      double pulled = pull_into_now(candidate, candidate_slot);
      if (pulled <= 0.0) break;
      moves.push_back({candidate, pulled});
    }
    // Push phase: skipped reservation mass slides toward its deadline into
    // whatever the fetches just freed.
    for (const auto& [id, s] : skipped)
      if (admitted_.count(id)) relocate_latest_first(id, s);
    return moves;
  }

  // Clock driver: transmits everything scheduled at the current slot,
  // retires finished requests, applies reservation expiry, then moves to
  // the next slot.
  SlotReport advance() {
    settle_unavailable_reservations(/*credit_spare=*/false);
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
    retire_completed();
    stats_.volume_sent += report.sent;
    report.utilization = report.sent / link_.capacity();
    report.accepted = slot_accepted_;
    report.rejected = slot_rejected_;
    report.cancelled_reservations = slot_cancelled_;
    slot_accepted_ = slot_rejected_ = slot_cancelled_ = 0;
    current_spare_ = link_.take_current_slot();
    return report;
  }

  // Test hook: scheduler-level bookkeeping consistency.
  bool invariants_hold(double eps = kEps) const {
    if (!link_.conservation_holds(eps)) return false;
    for (const auto& [id, a] : admitted_) {
      const AllocationProfile* profile = link_.find_ledger(id);
      double scheduled = profile ? profile->total() : 0.0;
      if (std::abs(scheduled - a.remaining) > eps) return false;
      if (a.remaining < -eps || a.transmitted < -eps) return false;
      if (a.transmitted > a.request.volume + eps) return false;
    }
    return true;
  }

 private:
  AdmissionResult admit(const Request& request, bool content_available) {
    if (request.id.empty() || request.volume <= 0.0)
      throw std::invalid_argument("submit: malformed request");
    if (request.arrival != t_now())
      throw std::invalid_argument("submit: request arrival must equal t_now");
    if (admitted_.count(request.id))
      throw std::invalid_argument("submit: duplicate request id " + request.id);
    if (request.deadline <= t_now()) return record(AdmissionResult::reject(RejectReason::kPastDeadline));
    if (!link_.in_horizon(request.deadline))
      return record(AdmissionResult::reject(RejectReason::kHorizon));

    double window = link_.window_residual(request.deadline);
    if (window < request.volume - kEps)
      return record(AdmissionResult::reject(RejectReason::kInsufficientCapacity,
                                            request.volume - window));

    LatestFirstProblem problem{request.volume, t_now(), request.deadline,
                               link_.residual_window(request.deadline)};
    LatestFirstResult solved = solve_latest_first(problem);
    assert(solved.feasible);
    apply_profile(request.id, request.deadline, solved.profile);
    admitted_[request.id] = Admitted{request, request.volume, 0.0, content_available};
    return record(AdmissionResult::accept(std::move(solved.profile)));
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

  void apply_profile(const std::string& id, SlotIndex deadline,
                     const AllocationProfile& profile) {
    AllocationProfile& entry = link_.ledger_entry(id);
    for (const auto& [slot, amount] : profile) {
      link_.consume(slot, amount);
      entry.add(slot, amount);
      occupancy_[slot].insert({deadline, id});
    }
  }

  // Moves up to the current spare from `id`'s allocation at slot s into the
  // current slot. Returns the amount moved.
  // id is taken by value: the call site's reference lives inside an
  // occupancy set node this function may erase.
  double pull_into_now(const std::string id, SlotIndex s) {
    Admitted& a = admitted_.at(id);
    AllocationProfile& profile = link_.ledger_entry(id);
    double available = profile.amount_at(s);
    double take = std::min(available, current_spare_);
    if (take <= kZeroAmount) return 0.0;
    profile.remove(s, take);
    link_.restore(s, take);
    profile.add(t_now(), take);
    if (profile.amount_at(s) <= 0.0) occupancy_at(s).erase({a.request.deadline, id});
    occupancy_[t_now()].insert({a.request.deadline, id});
    current_spare_ -= take;
    prune_occupancy(s);
    return take;
  }

  // Re-allocates an unavailable reservation's mass at slot s latest-first
  // within its remaining window ("push the transfer to the next timeslots").
  void relocate_latest_first(const std::string id, SlotIndex s) {
    Admitted& a = admitted_.at(id);
    AllocationProfile& profile = link_.ledger_entry(id);
    double amount = profile.amount_at(s);
    if (amount <= kZeroAmount) return;
    profile.remove(s, amount);
    link_.restore(s, amount);
    LatestFirstProblem problem{amount, t_now(), a.request.deadline,
                               link_.residual_window(a.request.deadline)};
    LatestFirstResult solved = solve_latest_first(problem);
    assert(solved.feasible);  // freeing s keeps at least `amount` available
    occupancy_at(s).erase({a.request.deadline, id});
    prune_occupancy(s);
    for (const auto& [slot, part] : solved.profile) {
      link_.consume(slot, part);
      profile.add(slot, part);
      occupancy_[slot].insert({a.request.deadline, id});
    }
  }

  // Reservations whose content is still missing cannot transmit in the
  // current slot: their mass here is pushed into the remaining window when
  // it fits, otherwise the whole reservation is cancelled and its bandwidth
  // freed for future elastic requests.
  void settle_unavailable_reservations(bool credit_spare) {
    auto here = occupancy_.find(t_now());
    if (here == occupancy_.end()) return;
    std::vector<std::string> pending;
    for (const auto& [deadline, id] : here->second)
      if (!admitted_.at(id).content_available) pending.push_back(id);
    for (const std::string& id : pending) {
      Admitted& a = admitted_.at(id);
      AllocationProfile& profile = link_.ledger_entry(id);
      double stuck = profile.amount_at(t_now());
      if (stuck <= kZeroAmount) continue;
      bool fits = a.request.deadline > t_now() &&
                  link_.window_residual(a.request.deadline) >= stuck - kEps;
      if (fits) {
        profile.remove(t_now(), stuck);
        occupancy_at(t_now()).erase({a.request.deadline, id});
        LatestFirstProblem problem{stuck, t_now(), a.request.deadline,
                                   link_.residual_window(a.request.deadline)};
        LatestFirstResult solved = solve_latest_first(problem);
        assert(solved.feasible);
        for (const auto& [slot, part] : solved.profile) {
          link_.consume(slot, part);
          profile.add(slot, part);
          occupancy_[slot].insert({a.request.deadline, id});
        }
      } else {
        cancel_reservation(id);
      }
      if (credit_spare) current_spare_ = std::min(current_spare_ + stuck, link_.capacity());
    }
    prune_occupancy(t_now());
  }

  void cancel_reservation(const std::string id) {
    Admitted& a = admitted_.at(id);
    AllocationProfile& profile = link_.ledger_entry(id);
    std::vector<std::pair<SlotIndex, double>> entries(profile.begin(), profile.end());
    for (const auto& [slot, amount] : entries) {
      if (slot > t_now()) link_.restore(slot, amount);
      occupancy_at(slot).erase({a.request.deadline, id});
      prune_occupancy(slot);
    }
    link_.erase_ledger(id);
    admitted_.erase(id);
    ++stats_.cancelled_reservations;
    ++slot_cancelled_;
  }

  void retire_completed() {
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
  }

  // Sub-tolerance remnants of a finished request go back to the residuals so
  // the occupancy index never outlives the admitted entry.
  void sweep_dust(const std::string& id, SlotIndex deadline) {
    const AllocationProfile* profile = link_.find_ledger(id);
    if (!profile || profile->empty()) return;
    std::vector<std::pair<SlotIndex, double>> entries(profile->begin(), profile->end());
    for (const auto& [slot, amount] : entries) {
      if (slot > t_now()) link_.restore(slot, amount);
      occupancy_at(slot).erase({deadline, id});
      prune_occupancy(slot);
    }
  }

  std::set<std::pair<SlotIndex, std::string>>& occupancy_at(SlotIndex slot) {
    return occupancy_[slot];
  }

  void prune_occupancy(SlotIndex slot) {
    auto it = occupancy_.find(slot);
    if (it != occupancy_.end() && it->second.empty()) occupancy_.erase(it);
  }

  LinkState link_;
  double current_spare_;
  std::map<std::string, Admitted> admitted_;
  // slot -> set of (deadline, id) with allocation mass at that slot.
  std::map<SlotIndex, std::set<std::pair<SlotIndex, std::string>>> occupancy_;
  SchedulerStats stats_;
  int slot_accepted_ = 0;
  int slot_rejected_ = 0;
  int slot_cancelled_ = 0;
};

}  // namespace rcd
