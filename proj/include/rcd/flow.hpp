// flow.hpp - network allocation kernel. Admission of a request (Q, td, A, B)
// on a topology is a min-cost flow on a time-layered graph: one copy of every
// link per slot in (t_now, td], arc cost (td - t) per unit, no storage
// between layers at intermediate nodes, a super-source feeding A in every
// layer and a super-sink draining B in every layer at zero cost. Solved by
// successive shortest paths with node potentials; costs are integral so the
// real-valued capacities are unproblematic.
#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <vector>

#include "rcd/core.hpp"

namespace rcd {

struct FlowProblem {
  Topology topology;
  int source = -1;
  int sink = -1;
  double volume = 0.0;
  SlotIndex t_now = 0;
  SlotIndex td = 0;
  // residual[l][i] is the free capacity of link l at slot t_now + 1 + i.
  std::vector<std::vector<double>> residual;
  // Links allowed to carry flow; empty means no restriction.
  std::set<int> admissible;

  SlotIndex window() const { return td - t_now; }

  // Decision-variable count of the underlying program: one E(t,l) per
  // link and window slot.
  std::int64_t variable_count() const {
    return static_cast<std::int64_t>(topology.link_count()) * window();
  }

  bool link_admissible(int l) const {
    return admissible.empty() || admissible.count(l) > 0;
  }

  bool well_formed() const {
    if (source < 0 || sink < 0 || source == sink) return false;
    if (volume <= 0.0 || td <= t_now) return false;
    if (residual.size() != topology.link_count()) return false;
    for (const auto& r : residual)
      if (r.size() != static_cast<std::size_t>(window())) return false;
    return true;
  }
};

struct FlowResult {
  bool feasible = false;
  // Per-link slot profiles, indexed like FlowProblem::residual.
  std::vector<AllocationProfile> link_profiles;
  double objective = 0.0;
  double shortfall = 0.0;
  std::int64_t variable_count = 0;

  double total_on_link(int l) const { return link_profiles[static_cast<std::size_t>(l)].total(); }
};

namespace detail {

// Time-layered min-cost flow network. Layers are node-disjoint: every
// augmenting path lives in a single slot, entering through the super-source
// and leaving through the super-sink.
class LayeredFlowGraph {
 public:
  struct Arc {
    int to = 0;
    int rev = 0;          // index of the reverse arc in arcs_[to]
    double cap = 0.0;     // remaining capacity
    double cost = 0.0;
    int link = -1;        // original link index, -1 for super arcs
    SlotIndex slot = 0;
    bool forward = false; // true for the original direction of a link arc
  };

  explicit LayeredFlowGraph(const FlowProblem& p) : p_(p) {
    n_nodes_ = 2 + static_cast<int>(p.topology.node_count()) * static_cast<int>(p.window());
    arcs_.assign(static_cast<std::size_t>(n_nodes_), {});
    potential_.assign(static_cast<std::size_t>(n_nodes_), 0.0);
    // Later (cheaper) layers first so equal-cost ties resolve toward the
    // deadline.
    for (SlotIndex k = p.window() - 1; k >= 0; --k) {
      SlotIndex slot = p.t_now + 1 + k;
      double layer_cost = static_cast<double>(p.td - slot);
      add_arc(kSource, layer_node(k, p.source), kInf, 0.0, -1, slot, false);
      add_arc(layer_node(k, p.sink), kSink, kInf, 0.0, -1, slot, false);
      for (std::size_t l = 0; l < p.topology.link_count(); ++l) {
        if (!p.link_admissible(static_cast<int>(l))) continue;
        double cap = p.residual[l][static_cast<std::size_t>(k)];
        if (cap <= kZeroAmount) continue;
        const Link& link = p.topology.links()[l];
        add_arc(layer_node(k, link.src), layer_node(k, link.dst), cap, layer_cost,
                static_cast<int>(l), slot, true);
      }
    }
  }

  // Pushes up to `target` units of minimum-cost flow; returns the amount
  // sent. The running remainder is decremented the same way the greedy
  // single-link fill does, so a one-link topology reproduces its profiles
  // bit for bit.
  double send(double target) {
    double remaining = target;
    while (remaining > kEps) {
      if (!dijkstra()) break;
      double delta = remaining;
      for (int v = kSink; v != kSource; v = prev_node_[static_cast<std::size_t>(v)]) {
        const Arc& a = arc_at(v);
        delta = std::min(delta, a.cap);
      }
      for (int v = kSink; v != kSource; v = prev_node_[static_cast<std::size_t>(v)]) {
        Arc& a = mutable_arc_at(v);
        a.cap -= delta;
        arcs_[static_cast<std::size_t>(a.to)][static_cast<std::size_t>(a.rev)].cap += delta;
      }
      remaining -= delta;
    }
    return target - remaining;
  }

  // Net flow per link per slot after send().
  std::vector<AllocationProfile> extract_profiles() const {
    std::vector<AllocationProfile> profiles(p_.topology.link_count());
    for (const auto& node_arcs : arcs_) {
      for (const Arc& a : node_arcs) {
        if (a.link < 0 || a.forward) continue;
        // Reverse arc capacity of a forward link arc equals its flow.
        if (a.cap > kZeroAmount)
          profiles[static_cast<std::size_t>(a.link)].add(a.slot, a.cap);
      }
    }
    return profiles;
  }

 private:
  static constexpr int kSource = 0;
  static constexpr int kSink = 1;
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  int layer_node(SlotIndex k, int v) const {
    return 2 + static_cast<int>(k) * static_cast<int>(p_.topology.node_count()) + v;
  }

  void add_arc(int from, int to, double cap, double cost, int link, SlotIndex slot,
               bool forward) {
    Arc fwd{to, static_cast<int>(arcs_[static_cast<std::size_t>(to)].size()), cap, cost,
            link, slot, forward};
    Arc rev{from, static_cast<int>(arcs_[static_cast<std::size_t>(from)].size()), 0.0,
            -cost, link, slot, false};
    arcs_[static_cast<std::size_t>(from)].push_back(fwd);
    arcs_[static_cast<std::size_t>(to)].push_back(rev);
  }

  const Arc& arc_at(int v) const {
    return arcs_[static_cast<std::size_t>(prev_node_[static_cast<std::size_t>(v)])]
                [static_cast<std::size_t>(prev_arc_[static_cast<std::size_t>(v)])];
  }
  Arc& mutable_arc_at(int v) {
    return arcs_[static_cast<std::size_t>(prev_node_[static_cast<std::size_t>(v)])]
                [static_cast<std::size_t>(prev_arc_[static_cast<std::size_t>(v)])];
  }

  // Shortest path by reduced cost with hop count as tie-breaker; ties beyond
  // that resolve by node id, keeping results deterministic.
  bool dijkstra() {
    const double inf = std::numeric_limits<double>::infinity();
    std::size_t n = static_cast<std::size_t>(n_nodes_);
    dist_.assign(n, inf);
    hops_.assign(n, std::numeric_limits<int>::max());
    prev_node_.assign(n, -1);
    prev_arc_.assign(n, -1);
    using Entry = std::tuple<double, int, int>;  // (dist, hops, node)
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    dist_[kSource] = 0.0;
    hops_[kSource] = 0;
    queue.push({0.0, 0, kSource});
    std::vector<char> done(n, 0);
    while (!queue.empty()) {
      auto [d, h, u] = queue.top();
      queue.pop();
      if (done[static_cast<std::size_t>(u)]) continue;
      if (d > dist_[static_cast<std::size_t>(u)] + kCostTol) continue;
      done[static_cast<std::size_t>(u)] = 1;
      const auto& out = arcs_[static_cast<std::size_t>(u)];
      for (std::size_t i = 0; i < out.size(); ++i) {
        const Arc& a = out[i];
        if (a.cap <= kZeroAmount) continue;
        double nd = dist_[static_cast<std::size_t>(u)] + a.cost +
                    potential_[static_cast<std::size_t>(u)] -
                    potential_[static_cast<std::size_t>(a.to)];
        int nh = hops_[static_cast<std::size_t>(u)] + (a.link >= 0 ? 1 : 0);
        std::size_t to = static_cast<std::size_t>(a.to);
        if (nd < dist_[to] - kCostTol ||
            (nd < dist_[to] + kCostTol && nh < hops_[to])) {
          dist_[to] = nd;
          hops_[to] = nh;
          prev_node_[to] = u;
          prev_arc_[to] = static_cast<int>(i);
          queue.push({nd, nh, a.to});
        }
      }
    }
    if (dist_[kSink] == inf) return false;
    for (std::size_t v = 0; v < n; ++v)
      if (dist_[v] < inf) potential_[v] += dist_[v];
    return true;
  }

  static constexpr double kCostTol = 1e-9;

  const FlowProblem& p_;
  int n_nodes_ = 0;
  std::vector<std::vector<Arc>> arcs_;
  std::vector<double> potential_;
  std::vector<double> dist_;
  std::vector<int> hops_;
  std::vector<int> prev_node_;
  std::vector<int> prev_arc_;
};

}  // namespace detail

// Exact minimizer of the close-to-deadline network objective. Infeasible iff
// the max flow over the window falls short of the volume.
inline FlowResult solve_flow(const FlowProblem& p) {
  if (!p.well_formed()) throw std::invalid_argument("solve_flow: malformed problem");
  FlowResult result;
  result.variable_count = p.variable_count();
  detail::LayeredFlowGraph graph(p);
  double sent = graph.send(p.volume);
  if (sent < p.volume - kEps) {
    result.feasible = false;
    result.shortfall = p.volume - sent;
    return result;
  }
  result.feasible = true;
  result.link_profiles = graph.extract_profiles();
  result.objective = 0.0;
  for (const auto& profile : result.link_profiles)
    for (const auto& [slot, amount] : profile)
      result.objective += amount * static_cast<double>(p.td - slot);
  return result;
}

// Union of the links on the k shortest loop-free paths by hop count
// (Yen's algorithm over breadth-first shortest paths). An empty set means
// src and dst are disconnected.
inline std::set<int> k_shortest_paths(const Topology& topology, int src, int dst, int k) {
  if (k < 1) throw std::invalid_argument("k_shortest_paths: k must be >= 1");
  if (src == dst) throw std::invalid_argument("k_shortest_paths: src == dst");

  // BFS shortest path as a link sequence, honoring banned links/nodes.
  auto bfs_path = [&](int from, const std::set<int>& banned_links,
                      const std::set<int>& banned_nodes) -> std::optional<std::vector<int>> {
    std::vector<int> via_link(topology.node_count(), -1);
    std::vector<char> seen(topology.node_count(), 0);
    std::queue<int> queue;
    queue.push(from);
    seen[static_cast<std::size_t>(from)] = 1;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop();
      if (u == dst) break;
      for (int l : topology.out_links(u)) {
        if (banned_links.count(l)) continue;
        int v = topology.links()[static_cast<std::size_t>(l)].dst;
        if (banned_nodes.count(v) || seen[static_cast<std::size_t>(v)]) continue;
        seen[static_cast<std::size_t>(v)] = 1;
        via_link[static_cast<std::size_t>(v)] = l;
        queue.push(v);
      }
    }
    if (!seen[static_cast<std::size_t>(dst)]) return std::nullopt;
    std::vector<int> path;
    for (int v = dst; v != from;) {
      int l = via_link[static_cast<std::size_t>(v)];
      path.push_back(l);
      v = topology.links()[static_cast<std::size_t>(l)].src;
    }
    std::reverse(path.begin(), path.end());
    return path;
  };

  auto first = bfs_path(src, {}, {});
  if (!first) return {};

  std::vector<std::vector<int>> accepted{*first};
  // Candidates ordered by (length, link sequence) for deterministic picks.
  auto cmp = [](const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  };
  std::set<std::vector<int>, decltype(cmp)> candidates(cmp);

  while (accepted.size() < static_cast<std::size_t>(k)) {
    const std::vector<int>& last = accepted.back();
    for (std::size_t spur = 0; spur < last.size(); ++spur) {
      int spur_node = topology.links()[static_cast<std::size_t>(last[spur])].src;
      std::vector<int> root(last.begin(), last.begin() + static_cast<std::ptrdiff_t>(spur));
      std::set<int> banned_links;
      for (const auto& p : accepted) {
        if (p.size() > spur && std::equal(root.begin(), root.end(), p.begin()))
          banned_links.insert(p[spur]);
      }
      std::set<int> banned_nodes;
      int walk = src;
      for (int l : root) {
        banned_nodes.insert(walk);
        walk = topology.links()[static_cast<std::size_t>(l)].dst;
      }
      auto tail = bfs_path(spur_node, banned_links, banned_nodes);
      if (!tail) continue;
      std::vector<int> candidate = root;
      candidate.insert(candidate.end(), tail->begin(), tail->end());
      bool already = false;
      for (const auto& p : accepted)
        if (p == candidate) already = true;
      if (!already) candidates.insert(candidate);
    }
    if (candidates.empty()) break;
    accepted.push_back(*candidates.begin());
    candidates.erase(candidates.begin());
  }

  std::set<int> links;
  for (const auto& path : accepted)
    for (int l : path) links.insert(l);
  return links;
}

}  // namespace rcd
