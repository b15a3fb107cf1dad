#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "cemb/common.hpp"
#include "cemb/dataset.hpp"
#include "cemb/distribution.hpp"
#include "cemb/expr.hpp"
#include "cemb/graph.hpp"
#include "cemb/parallel.hpp"
#include "cemb/rng.hpp"

namespace cemb {

enum class Layer { L1, L2 };

inline const char* layer_name(Layer l) { return l == Layer::L1 ? "L1" : "L2"; }

// Ordered finite set of scalar values; labels, when present, are display
// names for labeled levels.
struct ValueRange {
  std::vector<Value> values;
  std::vector<std::string> labels;  // empty or parallel to values

  static ValueRange of(std::vector<Value> vs) { return ValueRange{std::move(vs), {}}; }

  std::size_t size() const { return values.size(); }
  bool contains(Value v) const {
    return std::find(values.begin(), values.end(), v) != values.end();
  }
  std::size_t index_of(Value v) const {
    for (std::size_t i = 0; i < values.size(); ++i)
      if (values[i] == v) return i;
    fail(ErrorKind::ValueOutOfRange, "value " + format_value(v) + " outside range");
  }
  void validate(const std::string& owner) const {
    if (values.empty()) fail(ErrorKind::InvalidModel, "empty range for " + owner);
    std::set<Value> seen(values.begin(), values.end());
    if (seen.size() != values.size())
      fail(ErrorKind::InvalidModel, "duplicate values in range of " + owner);
    if (!labels.empty() && labels.size() != values.size())
      fail(ErrorKind::InvalidModel, "label list does not match range of " + owner);
  }
  bool operator==(const ValueRange& o) const { return values == o.values; }
};

struct TabularPmf {
  // Ordered support; probabilities are >= 0 and sum to 1 within 1e-12.
  std::vector<std::pair<Value, double>> entries;

  void validate(const std::string& owner) const {
    if (entries.empty()) fail(ErrorKind::InvalidModel, "empty pmf for " + owner);
    double sum = 0.0;
    std::set<Value> seen;
    for (const auto& [v, p] : entries) {
      if (p < 0.0) fail(ErrorKind::InvalidModel, "negative probability in pmf of " + owner);
      if (!seen.insert(v).second)
        fail(ErrorKind::InvalidModel, "duplicate pmf value in " + owner);
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
      fail(ErrorKind::InvalidModel, "pmf of " + owner + " sums to " + format_number(sum));
  }

  Value sample(double u) const {
    double acc = 0.0;
    for (const auto& [v, p] : entries) {
      acc += p;
      if (u < acc) return v;
    }
    return entries.back().first;
  }
};

struct NormalLaw {
  double mean = 0.0;
  double stddev = 1.0;
};

// Exogenous variable with either a tabular pmf (exact engine) or a normal
// law (sampling engine only).
struct ExogenousSpec {
  VariableId id;
  std::variant<TabularPmf, NormalLaw> law;

  bool is_tabular() const { return std::holds_alternative<TabularPmf>(law); }
  const TabularPmf& pmf() const { return std::get<TabularPmf>(law); }
  const NormalLaw& normal() const { return std::get<NormalLaw>(law); }
};

// Total map from parent assignments (signature order: endogenous parents
// then exogenous parents) to an output value.
struct TabularMap {
  std::map<std::vector<Value>, Value> rows;
};

struct StructuralFunction {
  VariableId target;
  std::vector<VariableId> endogenous_parents;
  std::vector<VariableId> exogenous_parents;
  std::variant<TabularMap, Expr> body;

  bool is_tabular() const { return std::holds_alternative<TabularMap>(body); }
  const TabularMap& table() const { return std::get<TabularMap>(body); }
  const Expr& expr() const { return std::get<Expr>(body); }
};

// Structural causal model over finite-range endogenous variables. Immutable
// after construction (validate() seals it); every engine operation is a pure
// function of the model and its arguments.
class Scm {
 public:
  Scm() = default;
  explicit Scm(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }

  // Declares an endogenous variable. A missing range marks an unbounded
  // (continuous-output) variable usable only by the sampling engine.
  void add_variable(const VariableId& id, std::optional<ValueRange> range) {
    if (id.empty()) fail(ErrorKind::InvalidModel, "empty variable name");
    if (has_variable(id) || find_exogenous(id))
      fail(ErrorKind::InvalidModel, "duplicate declaration of " + id);
    if (range) range->validate(id);
    order_.push_back(id);
    ranges_[id] = std::move(range);
  }

  void add_exogenous(ExogenousSpec spec) {
    if (spec.id.empty()) fail(ErrorKind::InvalidModel, "empty exogenous name");
    if (has_variable(spec.id) || find_exogenous(spec.id))
      fail(ErrorKind::InvalidModel, "duplicate declaration of " + spec.id);
    if (spec.is_tabular()) spec.pmf().validate(spec.id);
    exogenous_.push_back(std::move(spec));
  }

  void set_function(StructuralFunction fn) {
    if (!has_variable(fn.target))
      fail(ErrorKind::UnknownVariable, "function targets undeclared variable " + fn.target);
    functions_[fn.target] = std::move(fn);
  }

  void set_integer_outputs(bool v) { integer_outputs_ = v; }
  bool integer_outputs() const { return integer_outputs_; }

  const std::vector<VariableId>& variables() const { return order_; }
  const std::vector<ExogenousSpec>& exogenous() const { return exogenous_; }
  const std::map<VariableId, StructuralFunction>& functions() const { return functions_; }
  const std::map<VariableId, Value>& interventions() const { return interventions_; }

  bool has_variable(const VariableId& id) const { return ranges_.count(id) != 0; }

  const std::optional<ValueRange>& range_opt(const VariableId& id) const {
    auto it = ranges_.find(id);
    if (it == ranges_.end()) fail(ErrorKind::UnknownVariable, "no endogenous variable " + id);
    return it->second;
  }

  const ValueRange& range(const VariableId& id) const {
    const auto& r = range_opt(id);
    if (!r)
      fail(ErrorKind::InvalidModel, "variable " + id + " has no finite range");
    return *r;
  }

  bool all_ranges_finite() const {
    for (const auto& v : order_)
      if (!ranges_.at(v)) return false;
    return true;
  }

  const ExogenousSpec* find_exogenous(const VariableId& id) const {
    for (const auto& e : exogenous_)
      if (e.id == id) return &e;
    return nullptr;
  }

  bool all_exogenous_tabular() const {
    for (const auto& e : exogenous_)
      if (!e.is_tabular()) return false;
    return true;
  }

  // Structural validation: one function per variable, declared parents,
  // acyclic induced graph, total in-range tabular bodies.
  void validate() const {
    for (const auto& v : order_) {
      auto it = functions_.find(v);
      if (it == functions_.end())
        fail(ErrorKind::InvalidModel, "no structural function for " + v);
      const StructuralFunction& fn = it->second;
      for (const auto& p : fn.endogenous_parents) {
        if (!has_variable(p))
          fail(ErrorKind::UnknownVariable, "function for " + v + " references undeclared parent " + p);
        if (p == v) fail(ErrorKind::CyclicModel, v + " lists itself as a parent");
      }
      for (const auto& u : fn.exogenous_parents)
        if (!find_exogenous(u))
          fail(ErrorKind::UnknownVariable, "function for " + v + " references undeclared exogenous " + u);
      if (fn.is_tabular()) {
        validate_table(fn);
      } else {
        std::set<VariableId> used;
        fn.expr().collect_variables(used);
        std::set<VariableId> declared(fn.endogenous_parents.begin(), fn.endogenous_parents.end());
        declared.insert(fn.exogenous_parents.begin(), fn.exogenous_parents.end());
        for (const auto& u : used)
          if (!declared.count(u))
            fail(ErrorKind::UnknownVariable,
                 "expression for " + v + " uses undeclared parent " + u);
      }
    }
    for (const auto& [v, fn] : functions_)
      if (fn.target != v) fail(ErrorKind::InvalidModel, "function keyed under wrong target");
    induced_graph_base().topological_order();  // throws CyclicModel on a cycle
  }

  // Hard intervention: the returned model has the targeted functions replaced
  // by constants; this model is unchanged.
  Scm apply_intervention(const std::map<VariableId, Value>& assignment) const {
    Scm out = *this;
    for (const auto& [v, val] : assignment) {
      if (!has_variable(v)) fail(ErrorKind::UnknownVariable, "cannot intervene on " + v);
      const auto& r = ranges_.at(v);
      if (r && !r->contains(val))
        fail(ErrorKind::ValueOutOfRange,
             "do(" + v + "=" + format_value(val) + ") outside the variable's range");
      out.interventions_[v] = val;
    }
    return out;
  }

  bool is_intervened(const VariableId& v) const { return interventions_.count(v) != 0; }

  // Graph induced by the structural functions, with incoming incidences of
  // intervened variables removed.
  CausalGraph induced_graph() const {
    CausalGraph g;
    for (const auto& v : order_) g.add_vertex(v);
    for (const auto& v : order_) {
      if (is_intervened(v)) continue;
      const auto& fn = functions_.at(v);
      for (const auto& p : fn.endogenous_parents) g.add_directed(p, v);
    }
    for (const auto& e : exogenous_) {
      std::vector<VariableId> kids;
      for (const auto& v : order_) {
        if (is_intervened(v)) continue;
        const auto& fn = functions_.at(v);
        if (std::find(fn.exogenous_parents.begin(), fn.exogenous_parents.end(), e.id) !=
            fn.exogenous_parents.end())
          kids.push_back(v);
      }
      for (std::size_t i = 0; i < kids.size(); ++i)
        for (std::size_t j = i + 1; j < kids.size(); ++j) g.add_bidirected(kids[i], kids[j]);
    }
    g.topological_order();
    return g;
  }

  // Exact pushforward of the exogenous law through the functions, honoring
  // interventions. Requires the exact engine (tabular laws, finite ranges).
  DiscreteDistribution joint_distribution() const {
    require_exact_engine();
    std::vector<VariableId> topo = induced_graph_base().topological_order();
    DiscreteDistribution joint(order_);

    std::size_t n_exo = exogenous_.size();
    std::vector<std::size_t> idx(n_exo, 0);
    while (true) {
      double p = 1.0;
      std::map<VariableId, Value> exo_vals;
      for (std::size_t i = 0; i < n_exo; ++i) {
        const auto& [v, pv] = exogenous_[i].pmf().entries[idx[i]];
        exo_vals[exogenous_[i].id] = v;
        p *= pv;
      }
      if (p > 0.0) {
        std::map<VariableId, Value> endo = evaluate_exact(topo, exo_vals);
        DiscreteDistribution::Assignment a;
        a.reserve(order_.size());
        for (const auto& v : order_) a.push_back(endo.at(v));
        joint.add_mass(a, p);
      }
      // advance the odometer; a model with no exogenous has one combo
      std::size_t k = 0;
      while (k < n_exo) {
        if (++idx[k] < exogenous_[k].pmf().entries.size()) break;
        idx[k] = 0;
        ++k;
      }
      if (k == n_exo) break;
    }
    joint.normalize();
    return joint;
  }

  // L1 is the conditional of the observational joint; L2 marginalizes the
  // intervened model's joint. Targets are reordered to declaration order so
  // result keys are canonical.
  DiscreteDistribution query(const std::set<VariableId>& targets, Layer layer,
                             const std::map<VariableId, Value>& given) const {
    for (const auto& t : targets)
      if (!has_variable(t)) fail(ErrorKind::UnknownVariable, "query target " + t);
    std::vector<VariableId> ordered;
    for (const auto& v : order_)
      if (targets.count(v)) ordered.push_back(v);

    if (layer == Layer::L2) {
      const Scm intervened = given.empty() ? *this : apply_intervention(given);
      DiscreteDistribution joint = intervened.joint_distribution();
      return joint.marginal(ordered);
    }
    DiscreteDistribution joint = joint_distribution();
    if (given.empty()) return joint.marginal(ordered);
    for (const auto& [v, val] : given) {
      if (!has_variable(v)) fail(ErrorKind::UnknownVariable, "conditioning variable " + v);
      const auto& r = ranges_.at(v);
      if (r && !r->contains(val))
        fail(ErrorKind::ValueOutOfRange, "conditioning value outside range of " + v);
    }
    return joint.condition(given).marginal(ordered);
  }

  // Seeded sampling engine; works for both tabular and normal exogenous
  // laws. Deterministic given the seed, row-parallel.
  Dataset sample(std::size_t n, std::uint64_t seed) const {
    std::vector<VariableId> topo = induced_graph_base().topological_order();
    Dataset d;
    d.columns = order_;
    d.rows.assign(n, Dataset::Row(order_.size()));
    std::vector<std::uint64_t> streams;
    streams.reserve(exogenous_.size());
    for (const auto& e : exogenous_) streams.push_back(rng::stream_id(e.id));

    parallel_for(n, [&](std::size_t row) {
      std::map<VariableId, double> env;
      for (std::size_t i = 0; i < exogenous_.size(); ++i) {
        const auto& e = exogenous_[i];
        if (e.is_tabular()) {
          double u = rng::uniform01(seed, streams[i], row);
          env[e.id] = static_cast<double>(e.pmf().sample(u));
        } else {
          env[e.id] = rng::normal(seed, streams[i], row, e.normal().mean, e.normal().stddev);
        }
      }
      for (const auto& v : topo) env[v] = evaluate_numeric(v, env);
      for (std::size_t c = 0; c < order_.size(); ++c) d.rows[row][c] = env[order_[c]];
    });
    return d;
  }

  void require_exact_engine() const {
    for (const auto& e : exogenous_)
      if (!e.is_tabular())
        fail(ErrorKind::ContinuousExogenous,
             "exact engine requires tabular exogenous laws; " + e.id + " is parametric");
    for (const auto& v : order_)
      if (!ranges_.at(v))
        fail(ErrorKind::ContinuousExogenous,
             "exact engine requires a finite range for every variable; " + v + " is unbounded");
  }

 private:
  // Graph from declared parents, ignoring interventions; used for a stable
  // evaluation order (intervened variables are constants, so any topological
  // order of the base graph is valid).
  CausalGraph induced_graph_base() const {
    CausalGraph g;
    for (const auto& v : order_) g.add_vertex(v);
    for (const auto& v : order_) {
      auto it = functions_.find(v);
      if (it == functions_.end()) continue;
      for (const auto& p : it->second.endogenous_parents) g.add_directed(p, v);
    }
    return g;
  }

  void validate_table(const StructuralFunction& fn) const {
    // Totality over the product of parent ranges, outputs inside the target
    // range. Requires finite parent ranges and tabular exogenous parents.
    std::vector<std::vector<Value>> axes;
    for (const auto& p : fn.endogenous_parents) axes.push_back(range(p).values);
    for (const auto& u : fn.exogenous_parents) {
      const ExogenousSpec* e = find_exogenous(u);
      if (!e->is_tabular())
        fail(ErrorKind::InvalidModel,
             "tabular function for " + fn.target + " has a parametric exogenous parent " + u);
      std::vector<Value> support;
      for (const auto& [v, p] : e->pmf().entries) support.push_back(v);
      axes.push_back(std::move(support));
    }
    const ValueRange& target_range = range(fn.target);
    std::vector<std::size_t> idx(axes.size(), 0);
    std::size_t expect = 1;
    for (const auto& ax : axes) expect *= ax.size();
    if (fn.table().rows.size() != expect)
      fail(ErrorKind::InvalidModel,
           "table for " + fn.target + " has " + std::to_string(fn.table().rows.size()) +
               " rows, expected " + std::to_string(expect));
    while (true) {
      std::vector<Value> key;
      key.reserve(axes.size());
      for (std::size_t i = 0; i < axes.size(); ++i) key.push_back(axes[i][idx[i]]);
      auto it = fn.table().rows.find(key);
      if (it == fn.table().rows.end())
        fail(ErrorKind::InvalidModel,
             "table for " + fn.target + " missing row (" + join_values(key, ", ") + ")");
      if (!target_range.contains(it->second))
        fail(ErrorKind::ValueOutOfRange,
             "table for " + fn.target + " outputs " + format_value(it->second) +
                 " outside the target range");
      std::size_t k = 0;
      while (k < axes.size()) {
        if (++idx[k] < axes[k].size()) break;
        idx[k] = 0;
        ++k;
      }
      if (k == axes.size() || axes.empty()) break;
    }
  }

  std::map<VariableId, Value> evaluate_exact(const std::vector<VariableId>& topo,
                                             const std::map<VariableId, Value>& exo) const {
    std::map<VariableId, Value> endo;
    for (const auto& v : topo) {
      auto iv = interventions_.find(v);
      if (iv != interventions_.end()) {
        endo[v] = iv->second;
        continue;
      }
      const StructuralFunction& fn = functions_.at(v);
      Value out;
      if (fn.is_tabular()) {
        std::vector<Value> key;
        key.reserve(fn.endogenous_parents.size() + fn.exogenous_parents.size());
        for (const auto& p : fn.endogenous_parents) key.push_back(endo.at(p));
        for (const auto& u : fn.exogenous_parents) key.push_back(exo.at(u));
        out = fn.table().rows.at(key);
      } else {
        std::map<VariableId, double> env;
        for (const auto& p : fn.endogenous_parents) env[p] = static_cast<double>(endo.at(p));
        for (const auto& u : fn.exogenous_parents) env[u] = static_cast<double>(exo.at(u));
        double r = fn.expr().evaluate(env);
        if (integer_outputs_) r = std::ceil(r);
        if (r != std::floor(r))
          fail(ErrorKind::InvalidModel,
               "non-integer output " + format_number(r) + " for " + v + " in the exact engine");
        out = static_cast<Value>(r);
      }
      const auto& rr = ranges_.at(v);
      if (rr && !rr->contains(out))
        fail(ErrorKind::ValueOutOfRange,
             v + " evaluates to " + format_value(out) + " outside its range");
      endo[v] = out;
    }
    return endo;
  }

  double evaluate_numeric(const VariableId& v, const std::map<VariableId, double>& env) const {
    auto iv = interventions_.find(v);
    if (iv != interventions_.end()) return static_cast<double>(iv->second);
    const StructuralFunction& fn = functions_.at(v);
    if (fn.is_tabular()) {
      std::vector<Value> key;
      for (const auto& p : fn.endogenous_parents) key.push_back(to_value(env.at(p), p));
      for (const auto& u : fn.exogenous_parents) key.push_back(to_value(env.at(u), u));
      return static_cast<double>(fn.table().rows.at(key));
    }
    std::map<VariableId, double> local;
    for (const auto& p : fn.endogenous_parents) local[p] = env.at(p);
    for (const auto& u : fn.exogenous_parents) local[u] = env.at(u);
    double r = fn.expr().evaluate(local);
    if (integer_outputs_) r = std::ceil(r);
    return r;
  }

  static Value to_value(double d, const VariableId& owner) {
    if (d != std::floor(d))
      fail(ErrorKind::ValueOutOfRange, "non-integer value " + format_number(d) +
                                           " where a range value of " + owner + " is required");
    return static_cast<Value>(d);
  }

  std::string name_;
  std::vector<VariableId> order_;
  std::map<VariableId, std::optional<ValueRange>> ranges_;
  std::vector<ExogenousSpec> exogenous_;
  std::map<VariableId, StructuralFunction> functions_;
  std::map<VariableId, Value> interventions_;
  bool integer_outputs_ = false;
};

}  // namespace cemb
