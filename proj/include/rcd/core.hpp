// core.hpp - domain types shared by all schedulers: timeline, requests,
// allocations, link state, topology.
#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace rcd {

// Slot index on the discrete timeline. Slot duration is metadata only; all
// scheduling math works on indices.
using SlotIndex = std::int64_t;

// Absolute tolerance for all equality/bounds checks on traffic amounts.
inline constexpr double kEps = 1e-9;

// Amounts at or below this are treated as zero and never stored, so
// "earliest non-empty timeslot" stays well-defined.
inline constexpr double kZeroAmount = 1e-12;

inline constexpr double kDefaultSlotSeconds = 300.0;

class HorizonError : public std::runtime_error {
 public:
  explicit HorizonError(const std::string& what) : std::runtime_error(what) {}
};

enum class RequestKind { kElastic, kReservation };

// A transfer demand: volume Q to be delivered strictly after `arrival` and
// no later than `deadline`. Source/destination are set in the network case.
struct Request {
  std::string id;
  double volume = 0.0;
  SlotIndex arrival = 0;
  SlotIndex deadline = 0;
  std::optional<std::string> source;
  std::optional<std::string> destination;
  RequestKind kind = RequestKind::kElastic;

  bool well_formed() const {
    if (id.empty() || volume <= 0.0 || deadline <= arrival) return false;
    if (source && destination && *source == *destination) return false;
    return true;
  }
};

// Per-request map from timeslot to transmission amount on one link.
// Zero entries are never stored.
class AllocationProfile {
 public:
  using const_iterator = std::map<SlotIndex, double>::const_iterator;

  void add(SlotIndex slot, double amount) {
    if (amount <= kZeroAmount) return;
    entries_[slot] += amount;
  }

  // Removes up to `amount` from `slot`; returns the amount actually removed.
  double remove(SlotIndex slot, double amount) {
    auto it = entries_.find(slot);
    if (it == entries_.end()) return 0.0;
    double taken = std::min(amount, it->second);
    it->second -= taken;
    if (it->second <= kZeroAmount) entries_.erase(it);
    return taken;
  }

  double amount_at(SlotIndex slot) const {
    auto it = entries_.find(slot);
    return it == entries_.end() ? 0.0 : it->second;
  }

  double total() const {
    double sum = 0.0;
    for (const auto& [slot, amount] : entries_) sum += amount;
    return sum;
  }

  // Total allocated strictly after `slot`.
  double total_after(SlotIndex slot) const {
    double sum = 0.0;
    for (auto it = entries_.upper_bound(slot); it != entries_.end(); ++it)
      sum += it->second;
    return sum;
  }

  std::optional<SlotIndex> earliest_slot() const {
    if (entries_.empty()) return std::nullopt;
    return entries_.begin()->first;
  }

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const_iterator begin() const { return entries_.begin(); }
  const_iterator end() const { return entries_.end(); }
  const std::map<SlotIndex, double>& entries() const { return entries_; }

  bool operator==(const AllocationProfile&) const = default;

 private:
  std::map<SlotIndex, double> entries_;
};

// Per-slot residual capacity for one link plus the ledger of admitted
// allocations. Capacity is the post-highpri capacity C. The window of
// tracked future slots starts at t_now()+1; it is advanced by the clock
// and grows on demand unless a fixed horizon was requested.
class LinkState {
 public:
  // max_horizon == 0 means the window grows as needed; otherwise requests
  // reaching beyond t_now + max_horizon are refused with HorizonError.
  explicit LinkState(double capacity, SlotIndex max_horizon = 0)
      : capacity_(capacity), max_horizon_(max_horizon) {
    if (capacity <= 0.0) throw std::invalid_argument("link capacity must be > 0");
    if (max_horizon_ > 0) residual_.assign(static_cast<std::size_t>(max_horizon_), capacity_);
  }

  double capacity() const { return capacity_; }
  SlotIndex t_now() const { return t_now_; }
  SlotIndex horizon() const {
    return max_horizon_ > 0 ? max_horizon_ : static_cast<SlotIndex>(residual_.size());
  }
  bool fixed_horizon() const { return max_horizon_ > 0; }

  // True when slot t is inside (t_now, t_now + horizon] or the window can
  // still grow to reach it.
  bool in_horizon(SlotIndex t) const {
    return t > t_now_ && (max_horizon_ == 0 || t - t_now_ <= max_horizon_);
  }

  double residual_at(SlotIndex t) const {
    check_future(t);
    std::size_t i = index_of(t);
    return i < residual_.size() ? residual_[i] : capacity_;
  }

  // Sum of residual capacity over (t_now, td].
  double window_residual(SlotIndex td) const {
    if (td <= t_now_) throw std::invalid_argument("window_residual: empty window");
    if (!in_horizon(td))
      throw HorizonError("window_residual: deadline beyond horizon");
    double sum = 0.0;
    for (SlotIndex t = t_now_ + 1; t <= td; ++t) {
      std::size_t i = index_of(t);
      sum += i < residual_.size() ? residual_[i] : capacity_;
    }
    return sum;
  }

  void consume(SlotIndex t, double amount) {
    if (amount <= 0.0) return;
    check_future(t);
    if (!in_horizon(t)) throw HorizonError("consume: slot beyond horizon");
    ensure_tracked(t);
    std::size_t i = index_of(t);
    if (residual_[i] + kEps < amount)
      throw std::invalid_argument("consume: amount exceeds residual capacity");
    residual_[i] = std::max(0.0, residual_[i] - amount);
  }

  void restore(SlotIndex t, double amount) {
    if (amount <= 0.0) return;
    check_future(t);
    ensure_tracked(t);
    std::size_t i = index_of(t);
    residual_[i] += amount;
    if (residual_[i] > capacity_ + kEps)
      throw std::invalid_argument("restore: residual would exceed capacity");
    residual_[i] = std::min(residual_[i], capacity_);
  }

  // Residual capacity of the slot that just became current. The current
  // slot leaves the tracked window; its unconsumed remainder is what
  // pull-forward may still fill.
  double take_current_slot() {
    double r = capacity_;
    if (!residual_.empty()) {
      r = residual_.front();
      residual_.pop_front();
      if (max_horizon_ > 0) residual_.push_back(capacity_);
    }
    t_now_ += 1;
    return r;
  }

  const std::map<std::string, AllocationProfile>& ledger() const { return ledger_; }

  AllocationProfile& ledger_entry(const std::string& id) { return ledger_[id]; }

  const AllocationProfile* find_ledger(const std::string& id) const {
    auto it = ledger_.find(id);
    return it == ledger_.end() ? nullptr : &it->second;
  }

  void erase_ledger(const std::string& id) { ledger_.erase(id); }

  // Conservation: capacity - residual[t] must equal the ledger sum at t.
  bool conservation_holds(double eps = kEps) const {
    std::map<SlotIndex, double> allocated;
    for (const auto& [id, profile] : ledger_)
      for (const auto& [slot, amount] : profile)
        if (slot > t_now_) allocated[slot] += amount;
    for (SlotIndex t = t_now_ + 1; t <= t_now_ + static_cast<SlotIndex>(residual_.size()); ++t) {
      double used = capacity_ - residual_[index_of(t)];
      auto it = allocated.find(t);
      double expect = it == allocated.end() ? 0.0 : it->second;
      if (std::abs(used - expect) > eps) return false;
      allocated.erase(t);
    }
    for (const auto& [slot, amount] : allocated)
      if (amount > eps) return false;  // allocation outside tracked window
    return true;
  }

  // Snapshot of residuals for slots (t_now, td], for solver input.
  std::vector<double> residual_window(SlotIndex td) const {
    if (td <= t_now_) throw std::invalid_argument("residual_window: empty window");
    if (!in_horizon(td)) throw HorizonError("residual_window: beyond horizon");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(td - t_now_));
    for (SlotIndex t = t_now_ + 1; t <= td; ++t) {
      std::size_t i = index_of(t);
      out.push_back(i < residual_.size() ? residual_[i] : capacity_);
    }
    return out;
  }

 private:
  void check_future(SlotIndex t) const {
    if (t <= t_now_) throw std::invalid_argument("slot must be strictly after t_now");
  }

  std::size_t index_of(SlotIndex t) const { return static_cast<std::size_t>(t - t_now_ - 1); }

  void ensure_tracked(SlotIndex t) {
    if (!in_horizon(t)) throw HorizonError("slot beyond horizon");
    std::size_t i = index_of(t);
    while (residual_.size() <= i) residual_.push_back(capacity_);
  }

  double capacity_;
  SlotIndex max_horizon_;
  SlotIndex t_now_ = 0;
  std::deque<double> residual_;  // residual_[i] is slot t_now_ + 1 + i
  std::map<std::string, AllocationProfile> ledger_;
};

// Free-function form used throughout: total residual capacity in (t_now, td].
inline double window_residual(const LinkState& link, SlotIndex t_now, SlotIndex td) {
  if (t_now != link.t_now())
    throw std::invalid_argument("window_residual: t_now does not match link clock");
  return link.window_residual(td);
}

struct Link {
  std::string id;
  int src = -1;
  int dst = -1;
  double capacity = 0.0;
};

// Directed graph of nodes and capacitated links.
class Topology {
 public:
  Topology() = default;
  Topology(std::vector<std::string> nodes, std::vector<Link> links)
      : nodes_(std::move(nodes)), links_(std::move(links)) {
    validate();
  }

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t link_count() const { return links_.size(); }

  std::optional<int> node_index(const std::string& name) const {
    auto it = node_index_.find(name);
    if (it == node_index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<int> link_index(const std::string& id) const {
    auto it = link_index_.find(id);
    if (it == link_index_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<int>& out_links(int node) const { return out_links_[static_cast<std::size_t>(node)]; }
  const std::vector<int>& in_links(int node) const { return in_links_[static_cast<std::size_t>(node)]; }

 private:
  void validate() {
    if (links_.empty()) throw std::invalid_argument("topology needs at least one link");
    node_index_.clear();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!node_index_.emplace(nodes_[i], static_cast<int>(i)).second)
        throw std::invalid_argument("duplicate node id: " + nodes_[i]);
    }
    out_links_.assign(nodes_.size(), {});
    in_links_.assign(nodes_.size(), {});
    for (std::size_t i = 0; i < links_.size(); ++i) {
      const Link& l = links_[i];
      if (l.src < 0 || l.src >= static_cast<int>(nodes_.size()) || l.dst < 0 ||
          l.dst >= static_cast<int>(nodes_.size()))
        throw std::invalid_argument("link endpoint out of range: " + l.id);
      if (l.capacity <= 0.0) throw std::invalid_argument("link capacity must be > 0: " + l.id);
      if (!link_index_.emplace(l.id, static_cast<int>(i)).second)
        throw std::invalid_argument("duplicate link id: " + l.id);
      out_links_[static_cast<std::size_t>(l.src)].push_back(static_cast<int>(i));
      in_links_[static_cast<std::size_t>(l.dst)].push_back(static_cast<int>(i));
    }
  }

  std::vector<std::string> nodes_;
  std::vector<Link> links_;
  std::map<std::string, int> node_index_;
  std::map<std::string, int> link_index_;
  std::vector<std::vector<int>> out_links_;
  std::vector<std::vector<int>> in_links_;
};

}  // namespace rcd
