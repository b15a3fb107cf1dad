#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cemb/common.hpp"
#include "cemb/distribution.hpp"
#include "cemb/graph.hpp"
#include "cemb/scm.hpp"

namespace cemb {

// Surjective map from the range of a preimage cluster to the range of one
// high-level variable. `identity` and `sum` are built-in aggregators that
// also operate on raw dataset cells; `table` is an explicit total map over
// the preimage product range.
struct RangeMap {
  enum class Kind { Identity, Sum, Table };

  VariableId target;
  std::vector<VariableId> preimage;  // ordered
  Kind kind = Kind::Identity;
  std::map<std::vector<Value>, Value> table;

  static RangeMap identity(VariableId target, VariableId low) {
    RangeMap m;
    m.target = std::move(target);
    m.preimage = {std::move(low)};
    m.kind = Kind::Identity;
    return m;
  }
  static RangeMap sum(VariableId target, std::vector<VariableId> preimage) {
    RangeMap m;
    m.target = std::move(target);
    m.preimage = std::move(preimage);
    m.kind = Kind::Sum;
    return m;
  }
  static RangeMap tabular(VariableId target, std::vector<VariableId> preimage,
                          std::map<std::vector<Value>, Value> table) {
    RangeMap m;
    m.target = std::move(target);
    m.preimage = std::move(preimage);
    m.kind = Kind::Table;
    m.table = std::move(table);
    return m;
  }

  Value apply(const std::vector<Value>& tuple) const {
    if (tuple.size() != preimage.size())
      fail(ErrorKind::VariableMismatch, "range map for " + target + " applied to wrong arity");
    switch (kind) {
      case Kind::Identity:
        return tuple[0];
      case Kind::Sum: {
        Value s = 0;
        for (Value v : tuple) s += v;
        return s;
      }
      case Kind::Table: {
        auto it = table.find(tuple);
        if (it == table.end())
          fail(ErrorKind::ValueOutOfRange, "range map for " + target + " has no row (" +
                                               join_values(tuple, ", ") + ")");
        return it->second;
      }
    }
    fail(ErrorKind::InvalidArgument, "corrupt range map");
  }

  // Dataset path: built-in aggregators work on raw numeric cells, tables
  // require integral cells inside their declared rows.
  double apply_cells(const std::vector<double>& cells) const {
    switch (kind) {
      case Kind::Identity:
        return cells[0];
      case Kind::Sum: {
        double s = 0.0;
        for (double v : cells) s += v;
        return s;
      }
      case Kind::Table: {
        std::vector<Value> key;
        key.reserve(cells.size());
        for (double c : cells) {
          if (c != std::floor(c))
            fail(ErrorKind::ValueOutOfRange,
                 "tabular range map for " + target + " applied to non-integer cell");
          key.push_back(static_cast<Value>(c));
        }
        return static_cast<double>(apply(key));
      }
    }
    fail(ErrorKind::InvalidArgument, "corrupt range map");
  }

  const char* kind_name() const {
    switch (kind) {
      case Kind::Identity: return "identity";
      case Kind::Sum: return "sum";
      case Kind::Table: return "table";
    }
    return "?";
  }
};

// Relevant sets, variable map and per-variable range maps of a causal
// embedding from a low-level into a high-level model.
struct Embedding {
  std::string name;
  std::set<VariableId> relevant_low;        // R
  std::vector<VariableId> relevant_high;    // R', ordered
  VariableMap phi;                          // R -> R'
  std::map<VariableId, RangeMap> alphas;    // keyed by R'

  std::set<VariableId> relevant_high_set() const {
    return {relevant_high.begin(), relevant_high.end()};
  }

  static Embedding identity_of(const Scm& model) {
    Embedding e;
    e.name = "identity";
    for (const auto& v : model.variables()) {
      e.relevant_low.insert(v);
      e.relevant_high.push_back(v);
      e.alphas[v] = RangeMap::identity(v, v);
    }
    e.phi = VariableMap::identity(e.relevant_low);
    return e;
  }
};

struct StructureViolation {
  std::string where;   // offending variable
  std::string detail;  // offending value / condition
};

// Checks every structural invariant of the embedding against the two
// models: subset containment, totality and the two surjectivities, and
// preimage alignment. Totality/surjectivity of a range map can only be
// enumerated over finite ranges; unbounded variables are accepted
// structurally (the sampling pipeline is their only consumer).
inline std::vector<StructureViolation> validate_structure(const Embedding& e, const Scm& low,
                                                          const Scm& high) {
  std::vector<StructureViolation> out;
  for (const auto& v : e.relevant_low)
    if (!low.has_variable(v)) out.push_back({v, "relevant low variable not in the low model"});
  for (const auto& v : e.relevant_high)
    if (!high.has_variable(v)) out.push_back({v, "relevant high variable not in the high model"});
  if (!out.empty()) return out;

  if (e.phi.domain != e.relevant_low)
    out.push_back({"phi", "map domain differs from the relevant low set"});
  if (e.phi.codomain != e.relevant_high_set())
    out.push_back({"phi", "map codomain differs from the relevant high set"});
  try {
    e.phi.validate();
  } catch (const Error& err) {
    out.push_back({"phi", err.what()});
  }
  if (!out.empty()) return out;

  std::set<VariableId> keyed;
  for (const auto& [v, a] : e.alphas) keyed.insert(v);
  if (keyed != e.relevant_high_set()) {
    out.push_back({"alpha", "range maps are not keyed exactly by the relevant high set"});
    return out;
  }

  for (const auto& vp : e.relevant_high) {
    const RangeMap& a = e.alphas.at(vp);
    if (a.target != vp) {
      out.push_back({vp, "range map target mismatch"});
      continue;
    }
    std::vector<VariableId> pre = e.phi.preimage(vp);
    std::set<VariableId> pre_set(pre.begin(), pre.end());
    std::set<VariableId> declared(a.preimage.begin(), a.preimage.end());
    if (pre_set != declared) {
      out.push_back({vp, "range map preimage differs from the variable map preimage"});
      continue;
    }
    if (a.kind == RangeMap::Kind::Identity && a.preimage.size() != 1) {
      out.push_back({vp, "identity range map needs a single preimage variable"});
      continue;
    }

    bool finite = high.range_opt(vp).has_value();
    for (const auto& lv : a.preimage) finite = finite && low.range_opt(lv).has_value();
    if (!finite) continue;

    const ValueRange& target_range = high.range(vp);
    std::set<Value> hit;
    std::vector<std::vector<Value>> axes;
    for (const auto& lv : a.preimage) axes.push_back(low.range(lv).values);
    std::vector<std::size_t> idx(axes.size(), 0);
    while (true) {
      std::vector<Value> tuple;
      tuple.reserve(axes.size());
      for (std::size_t i = 0; i < axes.size(); ++i) tuple.push_back(axes[i][idx[i]]);
      Value image;
      bool have = true;
      if (a.kind == RangeMap::Kind::Table) {
        auto it = a.table.find(tuple);
        if (it == a.table.end()) {
          out.push_back({vp, "not total: missing row (" + join_values(tuple, ", ") + ")"});
          have = false;
        } else {
          image = it->second;
        }
      } else {
        image = a.apply(tuple);
      }
      if (have) {
        if (!target_range.contains(image))
          out.push_back({vp, "maps (" + join_values(tuple, ", ") + ") to " + format_value(image) +
                                 " outside the target range"});
        else
          hit.insert(image);
      }
      std::size_t k = 0;
      while (k < axes.size()) {
        if (++idx[k] < axes[k].size()) break;
        idx[k] = 0;
        ++k;
      }
      if (k == axes.size() || axes.empty()) break;
    }
    for (Value v : target_range.values)
      if (!hit.count(v))
        out.push_back({vp, "not surjective: value " + format_value(v) + " never produced"});
  }
  return out;
}

inline void require_valid_structure(const Embedding& e, const Scm& low, const Scm& high) {
  auto violations = validate_structure(e, low, high);
  if (!violations.empty())
    fail(ErrorKind::StructureInvalid,
         violations.front().where + ": " + violations.front().detail +
             (violations.size() > 1
                  ? " (+" + std::to_string(violations.size() - 1) + " more)"
                  : ""));
}

// Pushforward of a distribution over the preimage variables of the targets
// through their range maps. Mass is preserved exactly: every source cell is
// added to exactly one image cell.
inline DiscreteDistribution pushforward(const std::vector<const RangeMap*>& alphas,
                                        const DiscreteDistribution& dist) {
  std::vector<VariableId> targets;
  std::vector<std::vector<std::size_t>> positions(alphas.size());
  std::set<VariableId> used;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    targets.push_back(alphas[i]->target);
    for (const auto& lv : alphas[i]->preimage) {
      positions[i].push_back(dist.index_of(lv));
      used.insert(lv);
    }
  }
  std::set<VariableId> have(dist.variables().begin(), dist.variables().end());
  if (have != used)
    fail(ErrorKind::VariableMismatch,
         "pushforward input must be over exactly the union of preimages");

  DiscreteDistribution out(targets);
  for (const auto& [a, p] : dist.pmf()) {
    std::vector<Value> image;
    image.reserve(alphas.size());
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      std::vector<Value> tuple;
      tuple.reserve(positions[i].size());
      for (std::size_t pos : positions[i]) tuple.push_back(a[pos]);
      image.push_back(alphas[i]->apply(tuple));
    }
    out.add_mass(image, p);
  }
  return out;
}

enum class EmbeddingMethod { Projection, Mediated };

struct EmbeddingVerdict {
  bool ok = true;
  std::vector<std::string> violations;
};

// Direct check of the two mediated-structure biconditionals on the
// unprojected graphs. Deliberately does not build projections, so it can
// serve as an independent route against the projection-based check.
inline EmbeddingVerdict embedding_check_mediated(const CausalGraph& g_low,
                                                 const CausalGraph& g_high,
                                                 const Embedding& e) {
  const std::set<VariableId>& r = e.relevant_low;
  std::set<VariableId> rp = e.relevant_high_set();
  EmbeddingVerdict v;
  auto low_pair_has_path = [&](const VariableId& xp, const VariableId& yp) {
    for (const auto& x : e.phi.preimage(xp))
      for (const auto& y : e.phi.preimage(yp))
        if (has_mediated_path(g_low, r, x, y)) return true;
    return false;
  };
  auto low_pair_has_confounder = [&](const VariableId& xp, const VariableId& yp) {
    for (const auto& x : e.phi.preimage(xp))
      for (const auto& y : e.phi.preimage(yp))
        if (x != y && has_mediated_confounder(g_low, r, x, y)) return true;
    return false;
  };
  for (const auto& xp : rp)
    for (const auto& yp : rp) {
      if (xp == yp) continue;
      bool high_adj = has_mediated_path(g_high, rp, xp, yp);
      bool low_adj = low_pair_has_path(xp, yp);
      if (high_adj != low_adj)
        v.violations.push_back(std::string(high_adj ? "unmatched high" : "unmatched low") +
                               " mediated adjacency " + xp + " ~> " + yp);
      if (xp < yp) {
        bool high_conf = has_mediated_confounder(g_high, rp, xp, yp);
        bool low_conf = low_pair_has_confounder(xp, yp);
        if (high_conf != low_conf)
          v.violations.push_back(std::string(high_conf ? "unmatched high" : "unmatched low") +
                                 " mediated confounder " + xp + " <~> " + yp);
      }
    }
  v.ok = v.violations.empty();
  return v;
}

// Projection route: project both graphs onto their relevant sets and verify
// the cluster-DAG relation under phi.
inline EmbeddingVerdict embedding_check_projection(const CausalGraph& g_low,
                                                   const CausalGraph& g_high,
                                                   const Embedding& e) {
  CausalGraph low_proj = latent_project(g_low, e.relevant_low);
  CausalGraph high_proj = latent_project(g_high, e.relevant_high_set());
  CdagReport rep = is_cdag(low_proj, high_proj, e.phi);
  EmbeddingVerdict v;
  v.ok = rep.ok;
  v.violations = rep.describe();
  return v;
}

inline EmbeddingVerdict is_embedding(const Embedding& e, const Scm& low, const Scm& high,
                                     EmbeddingMethod method) {
  require_valid_structure(e, low, high);
  CausalGraph g_low = low.induced_graph();
  CausalGraph g_high = high.induced_graph();
  return method == EmbeddingMethod::Projection ? embedding_check_projection(g_low, g_high, e)
                                               : embedding_check_mediated(g_low, g_high, e);
}

}  // namespace cemb
