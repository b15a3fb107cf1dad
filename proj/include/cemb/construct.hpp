#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cemb/common.hpp"
#include "cemb/embedding.hpp"
#include "cemb/graph.hpp"
#include "cemb/scm.hpp"

namespace cemb {

// Canonical tupling of a cluster of low-level variables into a single
// high-level range. Singleton clusters keep their range verbatim (identity
// map); larger clusters are mixed-radix encoded, first variable most
// significant, codes 0..N-1.
struct ClusterEncoding {
  std::vector<VariableId> cluster;  // low declaration order
  ValueRange range;
  std::map<std::vector<Value>, Value> to_code;

  Value encode(const std::vector<Value>& tuple) const { return to_code.at(tuple); }

  const std::vector<Value>& decode(Value code) const {
    for (const auto& [tuple, c] : to_code)
      if (c == code) return tuple;
    fail(ErrorKind::ValueOutOfRange, "undecodable cluster code " + format_value(code));
  }
};

inline ClusterEncoding make_cluster_encoding(const Scm& low, std::vector<VariableId> cluster) {
  ClusterEncoding enc;
  enc.cluster = std::move(cluster);
  if (enc.cluster.empty()) fail(ErrorKind::InvalidArgument, "empty cluster");
  if (enc.cluster.size() == 1) {
    enc.range = low.range(enc.cluster[0]);
    for (Value v : enc.range.values) enc.to_code[{v}] = v;
    return enc;
  }
  std::vector<std::vector<Value>> axes;
  for (const auto& v : enc.cluster) axes.push_back(low.range(v).values);
  std::vector<std::size_t> idx(axes.size(), 0);
  Value code = 0;
  while (true) {
    std::vector<Value> tuple;
    tuple.reserve(axes.size());
    for (std::size_t i = 0; i < axes.size(); ++i) tuple.push_back(axes[i][idx[i]]);
    enc.to_code[tuple] = code;
    enc.range.values.push_back(code);
    ++code;
    std::size_t k = axes.size();
    while (k > 0) {  // last axis fastest: codes follow row-major tuple order
      if (++idx[k - 1] < axes[k - 1].size()) break;
      idx[k - 1] = 0;
      --k;
    }
    if (k == 0) break;
  }
  return enc;
}

// The embedding induced by a construction: phi as given, identity range
// maps on singleton clusters, the canonical tupling on larger ones.
inline Embedding construction_embedding(const Scm& low, const VariableMap& phi) {
  Embedding e;
  e.name = "construction";
  e.relevant_low = phi.domain;
  for (const auto& hv : phi.codomain) e.relevant_high.push_back(hv);
  e.phi = phi;
  for (const auto& hv : phi.codomain) {
    std::vector<VariableId> pre;
    for (const auto& v : low.variables())
      if (phi.domain.count(v) && phi.apply(v) == hv) pre.push_back(v);
    ClusterEncoding enc = make_cluster_encoding(low, pre);
    if (pre.size() == 1)
      e.alphas[hv] = RangeMap::identity(hv, pre[0]);
    else
      e.alphas[hv] = RangeMap::tabular(hv, pre, enc.to_code);
  }
  return e;
}

namespace construct_detail {

enum class VertexClass { Relevant, Carrier, Sink };

// One payload slot of a carrier: a parent value or a routed noise value.
struct Component {
  enum class Kind { Parent, LowExo, Dummy };
  Kind kind;
  VariableId id;               // parent vertex, low exogenous name, or dummy name
  std::vector<Value> support;  // the values this slot ranges over
};

struct VertexPlan {
  VertexClass cls = VertexClass::Sink;
  std::vector<VariableId> parents;       // high-graph parents (name order)
  std::vector<VariableId> attached_low;  // low exogenous handled at this vertex
  std::vector<VariableId> dummies;       // point-mass noise realizing leftover edges
  ClusterEncoding cluster;               // Relevant only
  ValueRange range;
  std::vector<Component> components;     // Carrier payload layout
};

struct Plan {
  std::vector<VariableId> topo;
  std::map<VariableId, VertexPlan> vertices;
  std::map<VariableId, VariableId> exo_name;  // low exogenous -> constructed name
};

struct AtomEnv {
  std::map<VariableId, Value> vars;  // low relevant variables carried by payloads
  std::map<VariableId, Value> exo;   // low exogenous values
};

// Unpack a constructed vertex's value into the low-model atoms it carries.
// Conflicting duplicates only arise on parent combinations that are
// unreachable in the assembled model; first occurrence wins there.
inline void decode_payload(const Plan& plan, const VariableId& vertex, Value value, AtomEnv& env) {
  const VertexPlan& vp = plan.vertices.at(vertex);
  if (vp.cls == VertexClass::Sink) return;
  if (vp.cls == VertexClass::Relevant) {
    const std::vector<Value>& tuple = vp.cluster.decode(value);
    for (std::size_t i = 0; i < vp.cluster.cluster.size(); ++i)
      env.vars.emplace(vp.cluster.cluster[i], tuple[i]);
    return;
  }
  // Carrier: mixed-radix decode, first component most significant.
  std::size_t rest = 1;
  for (const auto& c : vp.components) rest *= c.support.size();
  std::size_t code = static_cast<std::size_t>(value);
  for (const auto& c : vp.components) {
    rest /= c.support.size();
    std::size_t i = code / rest;
    code %= rest;
    Value v = c.support[i];
    switch (c.kind) {
      case Component::Kind::Parent: decode_payload(plan, c.id, v, env); break;
      case Component::Kind::LowExo: env.exo.emplace(c.id, v); break;
      case Component::Kind::Dummy: break;
    }
  }
}

// Smallest vertex set that can host one shared noise source: every member
// pair must already be bidirected in the target graph, and every cluster in
// `needed` must either be a member or be reached by a member through
// non-relevant vertices.
inline std::vector<VariableId> find_attachment_set(const CausalGraph& high,
                                                   const std::set<VariableId>& relevant_high,
                                                   const std::set<VariableId>& needed) {
  std::vector<VariableId> pool;
  std::map<VariableId, std::set<VariableId>> covers;
  for (const auto& t : high.vertices()) {
    std::set<VariableId> c;
    if (relevant_high.count(t)) {
      if (needed.count(t)) c.insert(t);
    } else {
      for (const auto& s : needed)
        if (has_mediated_path(high, relevant_high, t, s)) c.insert(s);
    }
    if (!c.empty()) {
      covers[t] = std::move(c);
      pool.push_back(t);
    }
  }
  const std::size_t p = pool.size();
  std::vector<std::size_t> masks;
  for (std::size_t m = 1; m < (std::size_t{1} << p); ++m) masks.push_back(m);
  std::stable_sort(masks.begin(), masks.end(), [](std::size_t a, std::size_t b) {
    return __builtin_popcountll(a) < __builtin_popcountll(b);
  });
  for (std::size_t m : masks) {
    std::vector<VariableId> t;
    for (std::size_t i = 0; i < p; ++i)
      if (m & (std::size_t{1} << i)) t.push_back(pool[i]);
    std::set<VariableId> covered;
    for (const auto& v : t) covered.insert(covers[v].begin(), covers[v].end());
    bool ok = true;
    for (const auto& s : needed)
      if (!covered.count(s)) { ok = false; break; }
    for (std::size_t i = 0; ok && i < t.size(); ++i)
      for (std::size_t j = i + 1; ok && j < t.size(); ++j)
        if (!high.has_bidirected(t[i], t[j])) ok = false;
    if (ok) return t;
  }
  return {};
}

}  // namespace construct_detail

// Completion of a graphically consistent variable map into a fully
// specified high-level model on `high_graph`:
//   - relevant vertices replicate the projected low-level mechanism over
//     encoded cluster tuples,
//   - off-relevant ancestors of the relevant set carry the cartesian
//     product of their inputs,
//   - remaining vertices are constants.
// Low-level noise whose influence spans several clusters is routed through
// an attachment set whose pairwise bidirected edges exist in the target
// graph; bidirected edges not needed for noise get point-mass placeholders
// so the constructed model induces exactly `high_graph`.
inline Scm construct_consistent_high_level(const Scm& low, const VariableMap& phi,
                                           const CausalGraph& high_graph) {
  using namespace construct_detail;
  low.validate();
  low.require_exact_engine();
  phi.validate();
  const std::set<VariableId>& relevant_low = phi.domain;
  std::set<VariableId> relevant_high = phi.codomain;
  for (const auto& v : relevant_low)
    if (!low.has_variable(v))
      fail(ErrorKind::UnknownVariable, "map domain variable " + v + " not in the low model");
  for (const auto& v : relevant_high) high_graph.require_vertex(v);

  CausalGraph g_low = low.induced_graph();
  CdagReport pre = is_cdag(latent_project(g_low, relevant_low),
                           latent_project(high_graph, relevant_high), phi);
  if (!pre.ok)
    fail(ErrorKind::NotGraphicallyConsistent,
         "projections are not in the cluster-DAG relation: " +
             join_strings(pre.describe(), "; "));

  Plan plan;
  plan.topo = high_graph.topological_order();

  std::set<VariableId> anc_relevant;
  for (const auto& s : relevant_high) {
    auto a = high_graph.ancestors(s);
    anc_relevant.insert(a.begin(), a.end());
  }
  for (const auto& v : high_graph.vertices()) {
    VertexPlan vp;
    if (relevant_high.count(v))
      vp.cls = VertexClass::Relevant;
    else if (anc_relevant.count(v))
      vp.cls = VertexClass::Carrier;
    else
      vp.cls = VertexClass::Sink;
    vp.parents = high_graph.parents(v);
    std::sort(vp.parents.begin(), vp.parents.end());
    plan.vertices[v] = std::move(vp);
  }
  for (const auto& hv : relevant_high) {
    std::vector<VariableId> pre_vars;
    for (const auto& v : low.variables())
      if (relevant_low.count(v) && phi.apply(v) == hv) pre_vars.push_back(v);
    plan.vertices[hv].cluster = make_cluster_encoding(low, pre_vars);
    plan.vertices[hv].range = plan.vertices[hv].cluster.range;
  }

  // Noise analysis: which clusters does each low exogenous reach, counting
  // direct children plus mediated influence through non-relevant variables.
  std::set<std::pair<VariableId, VariableId>> induced_bidirected;
  for (const auto& exo : low.exogenous()) {
    std::set<VariableId> reached;
    for (const auto& v : low.variables()) {
      if (low.is_intervened(v)) continue;
      const auto& fn = low.functions().at(v);
      if (std::find(fn.exogenous_parents.begin(), fn.exogenous_parents.end(), exo.id) ==
          fn.exogenous_parents.end())
        continue;
      if (relevant_low.count(v)) {
        reached.insert(v);
      } else {
        for (const auto& rv : relevant_low)
          if (has_mediated_path(g_low, relevant_low, v, rv)) reached.insert(rv);
      }
    }
    std::set<VariableId> needed;
    for (const auto& rv : reached) needed.insert(phi.apply(rv));
    if (needed.empty()) continue;

    std::vector<VariableId> attach = find_attachment_set(high_graph, relevant_high, needed);
    if (attach.empty())
      fail(ErrorKind::NotGraphicallyConsistent,
           "no vertex set in the high graph can host the noise of " + exo.id +
               " shared by clusters {" + join(needed, ", ", [](const VariableId& s) { return s; }) +
               "}");
    for (const auto& t : attach) plan.vertices[t].attached_low.push_back(exo.id);
    for (std::size_t i = 0; i < attach.size(); ++i)
      for (std::size_t j = i + 1; j < attach.size(); ++j)
        induced_bidirected.insert(attach[i] < attach[j]
                                      ? std::pair{attach[i], attach[j]}
                                      : std::pair{attach[j], attach[i]});
  }

  // Placeholders for bidirected edges no routed noise accounts for.
  for (const auto& [a, b] : high_graph.bidirected()) {
    if (induced_bidirected.count({a, b})) continue;
    VariableId name = "u_conf_" + a + "_" + b;
    plan.vertices[a].dummies.push_back(name);
    plan.vertices[b].dummies.push_back(name);
  }

  // Constructed exogenous names must not collide with vertex names.
  std::set<VariableId> taken(high_graph.vertices().begin(), high_graph.vertices().end());
  for (const auto& exo : low.exogenous()) {
    bool used = false;
    for (const auto& [v, vp] : plan.vertices)
      used = used || std::find(vp.attached_low.begin(), vp.attached_low.end(), exo.id) !=
                         vp.attached_low.end();
    if (!used) continue;
    VariableId name = "u_" + exo.id;
    while (taken.count(name)) name += "_";
    taken.insert(name);
    plan.exo_name[exo.id] = name;
  }

  // Low-model evaluation order, used when replaying cluster mechanisms.
  std::vector<VariableId> low_topo = g_low.topological_order();
  std::map<VariableId, std::size_t> low_topo_pos;
  for (std::size_t i = 0; i < low_topo.size(); ++i) low_topo_pos[low_topo[i]] = i;

  // Replays the low model for one cluster given the atoms decoded from the
  // vertex's inputs. Non-relevant variables are recomputed on the fly; they
  // are deterministic in the atoms, so every cluster sees the same values.
  auto eval_cluster = [&](const VariableId& hv, AtomEnv env) {
    const VertexPlan& vp = plan.vertices.at(hv);
    std::set<VariableId> own(vp.cluster.cluster.begin(), vp.cluster.cluster.end());
    std::map<VariableId, Value> computed;
    std::function<Value(const VariableId&)> eval_low = [&](const VariableId& w) -> Value {
      auto hit = computed.find(w);
      if (hit != computed.end()) return hit->second;
      auto iv = low.interventions().find(w);
      if (iv != low.interventions().end()) return computed[w] = iv->second;
      if (relevant_low.count(w) && !own.count(w)) {
        auto it = env.vars.find(w);
        if (it == env.vars.end())
          fail(ErrorKind::InvalidModel,
               "construction internal error: cluster " + hv + " lacks the value of " + w);
        return computed[w] = it->second;
      }
      const StructuralFunction& fn = low.functions().at(w);
      Value out;
      if (fn.is_tabular()) {
        std::vector<Value> key;
        for (const auto& p : fn.endogenous_parents) key.push_back(eval_low(p));
        for (const auto& u : fn.exogenous_parents) {
          auto it = env.exo.find(u);
          if (it == env.exo.end())
            fail(ErrorKind::InvalidModel,
                 "construction internal error: noise " + u + " not routed to " + hv);
          key.push_back(it->second);
        }
        out = fn.table().rows.at(key);
      } else {
        std::map<VariableId, double> num;
        for (const auto& p : fn.endogenous_parents) num[p] = static_cast<double>(eval_low(p));
        for (const auto& u : fn.exogenous_parents) {
          auto it = env.exo.find(u);
          if (it == env.exo.end())
            fail(ErrorKind::InvalidModel,
                 "construction internal error: noise " + u + " not routed to " + hv);
          num[u] = static_cast<double>(it->second);
        }
        double r = fn.expr().evaluate(num);
        if (low.integer_outputs()) r = std::ceil(r);
        if (r != std::floor(r))
          fail(ErrorKind::InvalidModel, "non-integer low output while constructing " + hv);
        out = static_cast<Value>(r);
      }
      return computed[w] = out;
    };
    std::vector<VariableId> members = vp.cluster.cluster;
    std::sort(members.begin(), members.end(), [&](const VariableId& a, const VariableId& b) {
      return low_topo_pos.at(a) < low_topo_pos.at(b);
    });
    for (const auto& m : members) eval_low(m);
    std::vector<Value> tuple;
    for (const auto& m : vp.cluster.cluster) tuple.push_back(computed.at(m));
    return vp.cluster.encode(tuple);
  };

  // Materialize ranges and tables in topological order so carrier ranges
  // exist before their children need them.
  Scm out("constructed_" + low.name());
  std::map<VariableId, StructuralFunction> built;
  for (const auto& v : plan.topo) {
    VertexPlan& vp = plan.vertices[v];

    vp.components.clear();
    for (const auto& p : vp.parents)
      vp.components.push_back(
          {Component::Kind::Parent, p, plan.vertices.at(p).range.values});
    for (const auto& exo : low.exogenous()) {
      if (std::find(vp.attached_low.begin(), vp.attached_low.end(), exo.id) ==
          vp.attached_low.end())
        continue;
      std::vector<Value> support;
      for (const auto& [val, prob] : exo.pmf().entries) support.push_back(val);
      vp.components.push_back({Component::Kind::LowExo, exo.id, std::move(support)});
    }
    for (const auto& d : vp.dummies)
      vp.components.push_back({Component::Kind::Dummy, d, {0}});

    if (vp.cls == VertexClass::Sink) {
      vp.range = ValueRange::of({0});
    } else if (vp.cls == VertexClass::Carrier) {
      std::size_t total = 1;
      for (const auto& c : vp.components) total *= c.support.size();
      vp.range = ValueRange{};
      for (std::size_t i = 0; i < total; ++i) vp.range.values.push_back(static_cast<Value>(i));
    }
    // Relevant ranges were set from the cluster encoding above.

    StructuralFunction fn;
    fn.target = v;
    fn.endogenous_parents = vp.parents;
    for (const auto& c : vp.components) {
      if (c.kind == Component::Kind::LowExo) fn.exogenous_parents.push_back(plan.exo_name.at(c.id));
      if (c.kind == Component::Kind::Dummy) fn.exogenous_parents.push_back(c.id);
    }

    TabularMap table;
    std::vector<std::size_t> idx(vp.components.size(), 0);
    while (true) {
      std::vector<Value> key;
      key.reserve(vp.components.size());
      for (std::size_t i = 0; i < vp.components.size(); ++i)
        key.push_back(vp.components[i].support[idx[i]]);
      Value outv = 0;
      if (vp.cls == VertexClass::Carrier) {
        std::size_t code = 0;
        for (std::size_t i = 0; i < vp.components.size(); ++i)
          code = code * vp.components[i].support.size() + idx[i];
        outv = static_cast<Value>(code);
      } else if (vp.cls == VertexClass::Relevant) {
        AtomEnv env;
        for (std::size_t i = 0; i < vp.components.size(); ++i) {
          const Component& c = vp.components[i];
          if (c.kind == Component::Kind::Parent)
            decode_payload(plan, c.id, key[i], env);
          else if (c.kind == Component::Kind::LowExo)
            env.exo.emplace(c.id, key[i]);
        }
        outv = eval_cluster(v, std::move(env));
      }
      table.rows[key] = outv;
      std::size_t k = vp.components.size();
      while (k > 0) {
        if (++idx[k - 1] < vp.components[k - 1].support.size()) break;
        idx[k - 1] = 0;
        --k;
      }
      if (k == 0) break;
    }
    fn.body = std::move(table);
    built[v] = std::move(fn);
  }

  for (const auto& v : high_graph.vertices()) out.add_variable(v, plan.vertices.at(v).range);
  for (const auto& exo : low.exogenous()) {
    auto it = plan.exo_name.find(exo.id);
    if (it == plan.exo_name.end()) continue;
    out.add_exogenous(ExogenousSpec{it->second, exo.pmf()});
  }
  std::set<VariableId> dummy_names;
  for (const auto& [v, vp] : plan.vertices)
    for (const auto& d : vp.dummies) dummy_names.insert(d);
  for (const auto& d : dummy_names)
    out.add_exogenous(ExogenousSpec{d, TabularPmf{{{0, 1.0}}}});
  for (const auto& v : high_graph.vertices()) out.set_function(built.at(v));

  out.validate();

  // The constructed model must induce exactly the requested graph.
  CausalGraph check = out.induced_graph();
  if (check.directed() != high_graph.directed() || check.bidirected() != high_graph.bidirected())
    fail(ErrorKind::InvalidModel, "construction internal error: induced graph mismatch");
  return out;
}

}  // namespace cemb
