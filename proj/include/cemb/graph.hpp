#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cemb/common.hpp"

namespace cemb {

// ADMG over endogenous variables: a directed acyclic part plus bidirected
// edges abbreviating shared exogenous parents. Bidirected edges never
// participate in cycle detection.
class CausalGraph {
 public:
  using DirectedEdge = std::pair<VariableId, VariableId>;
  using BidirectedEdge = std::pair<VariableId, VariableId>;  // stored with first < second

  CausalGraph() = default;
  explicit CausalGraph(std::vector<VariableId> vertices) {
    for (auto& v : vertices) add_vertex(std::move(v));
  }

  void add_vertex(VariableId v) {
    if (index_.count(v)) return;
    index_[v] = vertices_.size();
    vertices_.push_back(std::move(v));
  }

  void add_directed(const VariableId& from, const VariableId& to) {
    require_vertex(from);
    require_vertex(to);
    if (from == to) fail(ErrorKind::InvalidModel, "self-loop on " + from);
    directed_.emplace(from, to);
  }

  void add_bidirected(const VariableId& a, const VariableId& b) {
    require_vertex(a);
    require_vertex(b);
    if (a == b) fail(ErrorKind::InvalidModel, "bidirected self-loop on " + a);
    bidirected_.insert(a < b ? BidirectedEdge{a, b} : BidirectedEdge{b, a});
  }

  const std::vector<VariableId>& vertices() const { return vertices_; }
  const std::set<DirectedEdge>& directed() const { return directed_; }
  const std::set<BidirectedEdge>& bidirected() const { return bidirected_; }

  bool has_vertex(const VariableId& v) const { return index_.count(v) != 0; }
  bool has_directed(const VariableId& a, const VariableId& b) const {
    return directed_.count({a, b}) != 0;
  }
  bool has_bidirected(const VariableId& a, const VariableId& b) const {
    return bidirected_.count(a < b ? BidirectedEdge{a, b} : BidirectedEdge{b, a}) != 0;
  }

  std::vector<VariableId> children(const VariableId& v) const {
    std::vector<VariableId> out;
    for (const auto& [a, b] : directed_)
      if (a == v) out.push_back(b);
    return out;
  }

  std::vector<VariableId> parents(const VariableId& v) const {
    std::vector<VariableId> out;
    for (const auto& [a, b] : directed_)
      if (b == v) out.push_back(a);
    return out;
  }

  // Topological order of the directed part; throws CyclicModel on a cycle.
  std::vector<VariableId> topological_order() const {
    std::map<VariableId, int> indeg;
    for (const auto& v : vertices_) indeg[v] = 0;
    for (const auto& [a, b] : directed_) indeg[b]++;
    std::deque<VariableId> ready;
    for (const auto& v : vertices_)
      if (indeg[v] == 0) ready.push_back(v);
    std::vector<VariableId> order;
    while (!ready.empty()) {
      VariableId v = ready.front();
      ready.pop_front();
      order.push_back(v);
      for (const auto& [a, b] : directed_)
        if (a == v && --indeg[b] == 0) ready.push_back(b);
    }
    if (order.size() != vertices_.size())
      fail(ErrorKind::CyclicModel, "directed part of the graph has a cycle");
    return order;
  }

  bool is_acyclic() const {
    try {
      topological_order();
      return true;
    } catch (const Error&) {
      return false;
    }
  }

  // Ancestors of v (excluding v itself) along directed edges.
  std::set<VariableId> ancestors(const VariableId& v) const {
    require_vertex(v);
    std::set<VariableId> out;
    std::deque<VariableId> frontier{v};
    while (!frontier.empty()) {
      VariableId cur = frontier.front();
      frontier.pop_front();
      for (const auto& p : parents(cur))
        if (out.insert(p).second) frontier.push_back(p);
    }
    return out;
  }

  void require_vertex(const VariableId& v) const {
    if (!has_vertex(v)) fail(ErrorKind::UnknownVariable, "graph has no vertex '" + v + "'");
  }

 private:
  std::vector<VariableId> vertices_;
  std::map<VariableId, std::size_t> index_;
  std::set<DirectedEdge> directed_;
  std::set<BidirectedEdge> bidirected_;
};

inline void require_relevant_subset(const CausalGraph& g, const std::set<VariableId>& relevant) {
  for (const auto& v : relevant) g.require_vertex(v);
}

// Directed path X -> ... -> Y whose intermediate vertices all lie outside
// `relevant`. Direct edges count (zero intermediates). Per-pair DFS; this is
// the primitive behind the direct (unprojected) embedding check.
inline bool has_mediated_path(const CausalGraph& g, const std::set<VariableId>& relevant,
                              const VariableId& from, const VariableId& to) {
  if (from == to) return false;
  std::set<VariableId> seen;
  std::deque<VariableId> frontier{from};
  while (!frontier.empty()) {
    VariableId cur = frontier.front();
    frontier.pop_front();
    for (const auto& child : g.children(cur)) {
      if (child == to) return true;
      if (!relevant.count(child) && seen.insert(child).second) frontier.push_back(child);
    }
  }
  return false;
}

// Mediated confounder {x, y} wrt `relevant`: either a vertex z outside the
// relevant set with mediated paths into both, or a bidirected edge whose
// endpoints reach x and y through non-relevant intermediates (a direct
// bidirected x <-> y qualifies with zero-length reaches). A single
// bidirected edge is accepted as the hidden witness.
inline bool has_mediated_confounder(const CausalGraph& g, const std::set<VariableId>& relevant,
                                    const VariableId& x, const VariableId& y) {
  if (x == y) return false;
  auto reaches = [&](const VariableId& a, const VariableId& target) {
    if (a == target) return true;
    return !relevant.count(a) && has_mediated_path(g, relevant, a, target);
  };
  for (const auto& z : g.vertices()) {
    if (relevant.count(z)) continue;
    if (has_mediated_path(g, relevant, z, x) && has_mediated_path(g, relevant, z, y)) return true;
  }
  for (const auto& [a, b] : g.bidirected()) {
    if ((reaches(a, x) && reaches(b, y)) || (reaches(a, y) && reaches(b, x))) return true;
  }
  return false;
}

// All mediated adjacencies among `relevant`, built by per-source traversal
// through non-relevant vertices.
inline std::set<std::pair<VariableId, VariableId>> mediated_adjacencies(
    const CausalGraph& g, const std::set<VariableId>& relevant) {
  require_relevant_subset(g, relevant);
  std::set<std::pair<VariableId, VariableId>> out;
  for (const auto& x : relevant) {
    std::set<VariableId> seen;
    std::deque<VariableId> frontier{x};
    while (!frontier.empty()) {
      VariableId cur = frontier.front();
      frontier.pop_front();
      for (const auto& child : g.children(cur)) {
        if (relevant.count(child)) {
          if (child != x) out.emplace(x, child);
        } else if (seen.insert(child).second) {
          frontier.push_back(child);
        }
      }
    }
  }
  return out;
}

inline std::set<std::pair<VariableId, VariableId>> mediated_confounders(
    const CausalGraph& g, const std::set<VariableId>& relevant) {
  require_relevant_subset(g, relevant);
  std::set<std::pair<VariableId, VariableId>> out;
  for (const auto& x : relevant)
    for (const auto& y : relevant) {
      if (!(x < y)) continue;
      if (has_mediated_confounder(g, relevant, x, y)) out.emplace(x, y);
    }
  return out;
}

// Latent projection onto the relevant set: directed edges are the mediated
// adjacencies, bidirected edges the mediated confounders.
inline CausalGraph latent_project(const CausalGraph& g, const std::set<VariableId>& relevant) {
  require_relevant_subset(g, relevant);
  CausalGraph out;
  for (const auto& v : g.vertices())
    if (relevant.count(v)) out.add_vertex(v);
  for (const auto& [a, b] : mediated_adjacencies(g, relevant)) out.add_directed(a, b);
  for (const auto& [a, b] : mediated_confounders(g, relevant)) out.add_bidirected(a, b);
  out.topological_order();  // projections of DAGs stay acyclic; assert it
  return out;
}

// Surjective map between relevant variable sets.
struct VariableMap {
  std::set<VariableId> domain;
  std::set<VariableId> codomain;
  std::map<VariableId, VariableId> map;

  static VariableMap identity(const std::set<VariableId>& vars) {
    VariableMap m;
    m.domain = vars;
    m.codomain = vars;
    for (const auto& v : vars) m.map[v] = v;
    return m;
  }

  const VariableId& apply(const VariableId& v) const {
    auto it = map.find(v);
    if (it == map.end()) fail(ErrorKind::MapMismatch, "variable map undefined on '" + v + "'");
    return it->second;
  }

  std::vector<VariableId> preimage(const VariableId& target) const {
    std::vector<VariableId> out;
    for (const auto& [k, v] : map)
      if (v == target) out.push_back(k);
    return out;
  }

  void validate() const {
    std::set<VariableId> hit;
    for (const auto& v : domain) {
      auto it = map.find(v);
      if (it == map.end())
        fail(ErrorKind::MapMismatch, "map is not total: missing '" + v + "'");
      if (!codomain.count(it->second))
        fail(ErrorKind::MapMismatch, "map target '" + it->second + "' outside codomain");
      hit.insert(it->second);
    }
    for (const auto& [k, v] : map)
      if (!domain.count(k))
        fail(ErrorKind::MapMismatch, "map defined on '" + k + "' outside domain");
    if (hit.size() != codomain.size())
      fail(ErrorKind::MapMismatch, "map is not surjective onto its codomain");
  }
};

struct CdagReport {
  bool ok = true;
  std::vector<std::string> missing_directed;   // required by the low graph, absent in high
  std::vector<std::string> extra_directed;     // present in high, not licensed by low
  std::vector<std::string> missing_bidirected;
  std::vector<std::string> extra_bidirected;

  std::vector<std::string> describe() const {
    std::vector<std::string> out;
    for (const auto& e : missing_directed) out.push_back("missing directed edge " + e);
    for (const auto& e : extra_directed) out.push_back("extra directed edge " + e);
    for (const auto& e : missing_bidirected) out.push_back("missing bidirected edge " + e);
    for (const auto& e : extra_bidirected) out.push_back("extra bidirected edge " + e);
    return out;
  }
};

// Cluster-DAG verification: each high-level edge must exist exactly when
// some low-level edge connects the corresponding clusters. Low-level edges
// internal to a cluster are exempt.
inline CdagReport is_cdag(const CausalGraph& low, const CausalGraph& high, const VariableMap& phi) {
  std::set<VariableId> low_vs(low.vertices().begin(), low.vertices().end());
  std::set<VariableId> high_vs(high.vertices().begin(), high.vertices().end());
  if (phi.domain != low_vs)
    fail(ErrorKind::MapMismatch, "map domain does not equal the low graph's vertex set");
  if (phi.codomain != high_vs)
    fail(ErrorKind::MapMismatch, "map codomain does not equal the high graph's vertex set");
  phi.validate();

  std::set<std::pair<VariableId, VariableId>> required_directed;
  for (const auto& [a, b] : low.directed()) {
    const VariableId& ia = phi.apply(a);
    const VariableId& ib = phi.apply(b);
    if (ia != ib) required_directed.emplace(ia, ib);
  }
  std::set<std::pair<VariableId, VariableId>> required_bidirected;
  for (const auto& [a, b] : low.bidirected()) {
    const VariableId& ia = phi.apply(a);
    const VariableId& ib = phi.apply(b);
    if (ia != ib) required_bidirected.insert(ia < ib ? std::pair{ia, ib} : std::pair{ib, ia});
  }

  CdagReport rep;
  for (const auto& [a, b] : required_directed)
    if (!high.has_directed(a, b)) rep.missing_directed.push_back(a + " -> " + b);
  for (const auto& [a, b] : high.directed())
    if (!required_directed.count({a, b})) rep.extra_directed.push_back(a + " -> " + b);
  for (const auto& [a, b] : required_bidirected)
    if (!high.has_bidirected(a, b)) rep.missing_bidirected.push_back(a + " <-> " + b);
  for (const auto& [a, b] : high.bidirected())
    if (!required_bidirected.count({a, b})) rep.extra_bidirected.push_back(a + " <-> " + b);
  rep.ok = rep.missing_directed.empty() && rep.extra_directed.empty() &&
           rep.missing_bidirected.empty() && rep.extra_bidirected.empty();
  return rep;
}

}  // namespace cemb
