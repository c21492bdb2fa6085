// net_scheduler.hpp - close-to-deadline scheduling on a topology. Admission
// solves the time-layered min-cost flow on current residuals (optionally
// pruned to the k shortest paths) and never touches existing allocations;
// each slot, a deterministic heuristic pulls future traffic into spare
// current-slot capacity along whole paths.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "rcd/core.hpp"
#include "rcd/flow.hpp"
#include "rcd/link_scheduler.hpp"

namespace rcd {

struct NetAdmissionResult {
  bool accepted = false;
  RejectReason reason = RejectReason::kNone;
  std::vector<AllocationProfile> link_profiles;  // indexed by link
  double shortfall = 0.0;
  std::int64_t variable_count = 0;

  static NetAdmissionResult reject(RejectReason why, double shortfall = 0.0) {
    return NetAdmissionResult{false, why, {}, shortfall, 0};
  }
};

struct NetPullMove {
  std::string id;
  std::vector<int> path;  // link indices, source to destination
  double amount = 0.0;
};

class NetScheduler {
 public:
  struct Admitted {
    Request request;
    int source = -1;
    int sink = -1;
    double remaining = 0.0;
    double transmitted = 0.0;
  };

  explicit NetScheduler(Topology topology, int k_paths = 0, SlotIndex max_horizon = 0)
      : topology_(std::move(topology)), k_paths_(k_paths) {
    for (const Link& link : topology_.links()) {
      links_.emplace_back(link.capacity, max_horizon);
      current_spare_.push_back(link.capacity);
      cumulative_sent_.push_back(0.0);
    }
  }

  SlotIndex t_now() const { return t_now_; }
  const Topology& topology() const { return topology_; }
  const LinkState& link_state(int l) const { return links_[static_cast<std::size_t>(l)]; }
  const std::map<std::string, Admitted>& admitted() const { return admitted_; }
  const SchedulerStats& stats() const { return stats_; }
  int k_paths() const { return k_paths_; }

  NetAdmissionResult submit(const Request& request) {
    if (request.id.empty() || request.volume <= 0.0 || !request.source || !request.destination)
      throw std::invalid_argument("submit: malformed network request");
    if (request.arrival != t_now_)
      throw std::invalid_argument("submit: request arrival must equal t_now");
    if (admitted_.count(request.id))
      throw std::invalid_argument("submit: duplicate request id " + request.id);
    auto src = topology_.node_index(*request.source);
    auto dst = topology_.node_index(*request.destination);
    if (!src || !dst)
      throw std::invalid_argument("submit: unknown node in request " + request.id);
    if (request.deadline <= t_now_)
      return record(NetAdmissionResult::reject(RejectReason::kPastDeadline));
    if (!links_.front().in_horizon(request.deadline))
      return record(NetAdmissionResult::reject(RejectReason::kHorizon));

    FlowProblem problem;
    problem.topology = topology_;
    problem.source = *src;
    problem.sink = *dst;
    problem.volume = request.volume;
    problem.t_now = t_now_;
    problem.td = request.deadline;
    problem.residual.reserve(links_.size());
    for (const LinkState& link : links_)
      problem.residual.push_back(link.residual_window(request.deadline));
    if (k_paths_ > 0) {
      problem.admissible = k_shortest_paths(topology_, *src, *dst, k_paths_);
      if (problem.admissible.empty())
        return record(NetAdmissionResult::reject(RejectReason::kNoPath));
    } else if (k_shortest_paths(topology_, *src, *dst, 1).empty()) {
      return record(NetAdmissionResult::reject(RejectReason::kNoPath));
    }

    FlowResult solved = solve_flow(problem);
    if (!solved.feasible)
      return record(NetAdmissionResult::reject(RejectReason::kInsufficientCapacity,
                                               solved.shortfall));
    for (std::size_t l = 0; l < links_.size(); ++l) {
      AllocationProfile& entry = links_[l].ledger_entry(request.id);
      for (const auto& [slot, amount] : solved.link_profiles[l]) {
        links_[l].consume(slot, amount);
        entry.add(slot, amount);
      }
      if (entry.empty()) links_[l].erase_ledger(request.id);
    }
    admitted_[request.id] = Admitted{request, *src, *dst, request.volume, 0.0};
    NetAdmissionResult result;
    result.accepted = true;
    result.link_profiles = std::move(solved.link_profiles);
    result.variable_count = solved.variable_count;
    return record(std::move(result));
  }

  // Pull-forward heuristic: repeatedly take the admitted request whose
  // earliest scheduled slot is smallest (ties: deadline, then id) and move
  // one path-consistent slice of that future mass into the current slot
  // along links with spare capacity. Deterministic and possibly suboptimal;
  // with several links no rule without future knowledge is optimal.
  std::vector<NetPullMove> pull_forward() {
    std::vector<NetPullMove> moves;
    std::set<std::string> exhausted;
    while (true) {
      std::string best_id;
      SlotIndex best_slot = 0;
      SlotIndex best_deadline = 0;
      for (const auto& [id, a] : admitted_) {
        if (exhausted.count(id)) continue;
        auto earliest = earliest_future_slot(id);
        if (!earliest) continue;
        if (best_id.empty() || std::tie(*earliest, a.request.deadline, id) <
                                   std::tie(best_slot, best_deadline, best_id)) {
          best_id = id;
          best_slot = *earliest;
          best_deadline = a.request.deadline;
        }
      }
      if (best_id.empty()) break;
      auto move = try_pull(best_id, best_slot);
      if (move) {
        moves.push_back(*move);
      } else {
        exhausted.insert(best_id);
      }
    }
    return moves;
  }

  SlotReport advance() {
    SlotReport report;
    report.slot = t_now_;
    double utilization_sum = 0.0;
    for (std::size_t l = 0; l < links_.size(); ++l) {
      double sent_l = 0.0;
      std::vector<std::string> ids;
      for (const auto& [id, profile] : links_[l].ledger())
        if (profile.amount_at(t_now_) > 0.0) ids.push_back(id);
      for (const std::string& id : ids) {
        AllocationProfile& profile = links_[l].ledger_entry(id);
        double amount = profile.amount_at(t_now_);
        profile.remove(t_now_, amount);
        if (profile.empty()) links_[l].erase_ledger(id);
        sent_l += amount;
        // Delivered volume counts once, at the source cut.
        Admitted& a = admitted_.at(id);
        if (topology_.links()[l].src == a.source) {
          a.transmitted += amount;
          a.remaining -= amount;
        }
      }
      cumulative_sent_[l] += sent_l;
      report.sent += sent_l;
      utilization_sum += sent_l / links_[l].capacity();
    }
    for (auto it = admitted_.begin(); it != admitted_.end();) {
      if (it->second.remaining <= kEps) {
        for (std::size_t l = 0; l < links_.size(); ++l) {
          const AllocationProfile* profile = links_[l].find_ledger(it->first);
          if (!profile) continue;
          std::vector<std::pair<SlotIndex, double>> dust(profile->begin(), profile->end());
          for (const auto& [slot, amount] : dust)
            if (slot > t_now_) links_[l].restore(slot, amount);
          links_[l].erase_ledger(it->first);
        }
        ++stats_.completed;
        it = admitted_.erase(it);
      } else {
        ++it;
      }
    }
    stats_.volume_sent += report.sent;
    report.utilization = utilization_sum / static_cast<double>(links_.size());
    report.accepted = slot_accepted_;
    report.rejected = slot_rejected_;
    slot_accepted_ = slot_rejected_ = 0;
    for (std::size_t l = 0; l < links_.size(); ++l)
      current_spare_[l] = links_[l].take_current_slot();
    t_now_ += 1;
    return report;
  }

  // Lifetime utilization per link: volume sent so far over capacity x slots.
  std::vector<double> link_utilization() const {
    std::vector<double> out;
    for (std::size_t l = 0; l < links_.size(); ++l) {
      double denom = links_[l].capacity() * static_cast<double>(std::max<SlotIndex>(t_now_, 1));
      out.push_back(cumulative_sent_[l] / denom);
    }
    return out;
  }

  bool invariants_hold(double eps = kEps) const {
    for (const LinkState& link : links_)
      if (!link.conservation_holds(eps)) return false;
    // Per-request, per-slot conservation at intermediate nodes.
    for (const auto& [id, a] : admitted_) {
      std::map<SlotIndex, std::map<int, double>> by_slot;  // slot -> node -> net
      for (std::size_t l = 0; l < links_.size(); ++l) {
        const AllocationProfile* profile = links_[l].find_ledger(id);
        if (!profile) continue;
        for (const auto& [slot, amount] : *profile) {
          by_slot[slot][topology_.links()[l].src] -= amount;
          by_slot[slot][topology_.links()[l].dst] += amount;
        }
      }
      double total_from_source = 0.0;
      for (const auto& [slot, nodes] : by_slot) {
        for (const auto& [node, net] : nodes) {
          if (node == a.source) {
            total_from_source += -net;
          } else if (node != a.sink && std::abs(net) > eps) {
            return false;
          }
        }
      }
      if (std::abs(total_from_source - a.remaining) > eps) return false;
    }
    return true;
  }

 private:
  std::optional<SlotIndex> earliest_future_slot(const std::string& id) const {
    std::optional<SlotIndex> best;
    for (const LinkState& link : links_) {
      const AllocationProfile* profile = link.find_ledger(id);
      if (!profile) continue;
      for (const auto& [slot, amount] : *profile) {
        if (slot <= t_now_) continue;
        if (!best || slot < *best) best = slot;
        break;
      }
    }
    return best;
  }

  // Breadth-first path (fewest hops, deterministic by link order) through
  // links passing `usable`.
  template <typename Pred>
  std::optional<std::vector<int>> find_path(int src, int dst, Pred usable) const {
    std::vector<int> via(topology_.node_count(), -1);
    std::vector<char> seen(topology_.node_count(), 0);
    std::queue<int> queue;
    queue.push(src);
    seen[static_cast<std::size_t>(src)] = 1;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop();
      if (u == dst) break;
      for (int l : topology_.out_links(u)) {
        if (!usable(l)) continue;
        int v = topology_.links()[static_cast<std::size_t>(l)].dst;
        if (seen[static_cast<std::size_t>(v)]) continue;
        seen[static_cast<std::size_t>(v)] = 1;
        via[static_cast<std::size_t>(v)] = l;
        queue.push(v);
      }
    }
    if (!seen[static_cast<std::size_t>(dst)]) return std::nullopt;
    std::vector<int> path;
    for (int v = dst; v != src;) {
      int l = via[static_cast<std::size_t>(v)];
      path.push_back(l);
      v = topology_.links()[static_cast<std::size_t>(l)].src;
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  std::optional<NetPullMove> try_pull(const std::string& id, SlotIndex s) {
    Admitted& a = admitted_.at(id);
    // Peel one path of the request's slot-s flow.
    auto flow_path = find_path(a.source, a.sink, [&](int l) {
      const AllocationProfile* profile = links_[static_cast<std::size_t>(l)].find_ledger(id);
      return profile && profile->amount_at(s) > kZeroAmount;
    });
    if (!flow_path) return std::nullopt;
    // A current-slot route with spare capacity on every hop.
    auto now_path = find_path(a.source, a.sink, [&](int l) {
      return current_spare_[static_cast<std::size_t>(l)] > kEps;
    });
    if (!now_path) return std::nullopt;

    double delta = std::numeric_limits<double>::infinity();
    for (int l : *flow_path)
      delta = std::min(delta, links_[static_cast<std::size_t>(l)].ledger_entry(id).amount_at(s));
    for (int l : *now_path)
      delta = std::min(delta, current_spare_[static_cast<std::size_t>(l)]);
    if (delta <= kEps) return std::nullopt;

    for (int l : *flow_path) {
      links_[static_cast<std::size_t>(l)].ledger_entry(id).remove(s, delta);
      links_[static_cast<std::size_t>(l)].restore(s, delta);
      if (links_[static_cast<std::size_t>(l)].ledger_entry(id).empty())
        links_[static_cast<std::size_t>(l)].erase_ledger(id);
    }
    for (int l : *now_path) {
      links_[static_cast<std::size_t>(l)].ledger_entry(id).add(t_now_, delta);
      current_spare_[static_cast<std::size_t>(l)] -= delta;
    }
    return NetPullMove{id, *now_path, delta};
  }

  NetAdmissionResult record(NetAdmissionResult r) {
    if (r.accepted) {
      ++stats_.accepted;
      ++slot_accepted_;
    } else {
      ++stats_.rejected;
      ++slot_rejected_;
    }
    return r;
  }

  Topology topology_;
  int k_paths_;
  SlotIndex t_now_ = 0;
  std::vector<LinkState> links_;
  std::vector<double> current_spare_;
  std::vector<double> cumulative_sent_;
  std::map<std::string, Admitted> admitted_;
  SchedulerStats stats_;
  int slot_accepted_ = 0;
  int slot_rejected_ = 0;
};

}  // namespace rcd
