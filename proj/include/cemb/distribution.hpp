#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "cemb/common.hpp"

namespace cemb {

// Normalized tabular pmf over full assignments of an ordered variable list.
// Assignment tuples follow the variable order, which makes pmf keys
// canonical and map iteration deterministic.
class DiscreteDistribution {
 public:
  using Assignment = std::vector<Value>;

  DiscreteDistribution() = default;
  explicit DiscreteDistribution(std::vector<VariableId> variables)
      : variables_(std::move(variables)) {}

  static DiscreteDistribution unit() {
    // Distribution over the empty variable tuple: probability 1 on ().
    DiscreteDistribution d;
    d.pmf_[{}] = 1.0;
    return d;
  }

  const std::vector<VariableId>& variables() const { return variables_; }
  const std::map<Assignment, double>& pmf() const { return pmf_; }

  void add_mass(const Assignment& a, double p) {
    if (a.size() != variables_.size())
      fail(ErrorKind::VariableMismatch, "assignment arity does not match variable list");
    if (p != 0.0) pmf_[a] += p;
  }

  double probability(const Assignment& a) const {
    auto it = pmf_.find(a);
    return it == pmf_.end() ? 0.0 : it->second;
  }

  double total_mass() const {
    double s = 0.0;
    for (const auto& [a, p] : pmf_) s += p;
    return s;
  }

  void normalize() {
    double s = total_mass();
    if (s <= 0.0) fail(ErrorKind::ZeroProbabilityCondition, "cannot normalize zero-mass table");
    for (auto& [a, p] : pmf_) p /= s;
  }

  bool has_variable(const VariableId& v) const {
    return std::find(variables_.begin(), variables_.end(), v) != variables_.end();
  }

  std::size_t index_of(const VariableId& v) const {
    for (std::size_t i = 0; i < variables_.size(); ++i)
      if (variables_[i] == v) return i;
    fail(ErrorKind::UnknownVariable, "variable not in distribution: " + v);
  }

  // Marginal onto `vars`, kept in the order given.
  DiscreteDistribution marginal(const std::vector<VariableId>& vars) const {
    std::vector<std::size_t> idx;
    idx.reserve(vars.size());
    for (const auto& v : vars) idx.push_back(index_of(v));
    DiscreteDistribution out(vars);
    for (const auto& [a, p] : pmf_) {
      Assignment key;
      key.reserve(idx.size());
      for (std::size_t i : idx) key.push_back(a[i]);
      out.pmf_[key] += p;
    }
    return out;
  }

  // Conditional distribution of the full tuple given exact values for a
  // subset of variables. Throws ZeroProbabilityCondition on mass zero.
  DiscreteDistribution condition(const std::map<VariableId, Value>& given) const {
    std::vector<std::pair<std::size_t, Value>> fixed;
    fixed.reserve(given.size());
    for (const auto& [v, val] : given) fixed.emplace_back(index_of(v), val);
    DiscreteDistribution out(variables_);
    double mass = 0.0;
    for (const auto& [a, p] : pmf_) {
      bool match = true;
      for (const auto& [i, val] : fixed)
        if (a[i] != val) { match = false; break; }
      if (match) {
        out.pmf_[a] += p;
        mass += p;
      }
    }
    if (mass <= 0.0)
      fail(ErrorKind::ZeroProbabilityCondition,
           "conditioning event has probability zero");
    for (auto& [a, p] : out.pmf_) p /= mass;
    return out;
  }

  double event_probability(const std::map<VariableId, Value>& given) const {
    std::vector<std::pair<std::size_t, Value>> fixed;
    for (const auto& [v, val] : given) fixed.emplace_back(index_of(v), val);
    double mass = 0.0;
    for (const auto& [a, p] : pmf_) {
      bool match = true;
      for (const auto& [i, val] : fixed)
        if (a[i] != val) { match = false; break; }
      if (match) mass += p;
    }
    return mass;
  }

  std::string to_string() const {
    std::string out = "P(" + join_strings(variables_, ", ") + ")";
    for (const auto& [a, p] : pmf_)
      out += "\n  (" + join_values(a, ", ") + ") = " + format_number(p);
    return out;
  }

 private:
  std::vector<VariableId> variables_;
  std::map<Assignment, double> pmf_;
};

inline void require_same_variables(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  if (p.variables() != q.variables())
    fail(ErrorKind::StructureMismatch,
         "distributions are over different variable lists: (" +
             join_strings(p.variables(), ",") + ") vs (" + join_strings(q.variables(), ",") + ")");
}

// Total variation distance: half the L1 distance over the union of supports.
inline double total_variation(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  require_same_variables(p, q);
  double s = 0.0;
  for (const auto& [a, pv] : p.pmf()) s += std::fabs(pv - q.probability(a));
  for (const auto& [a, qv] : q.pmf())
    if (p.probability(a) == 0.0) s += std::fabs(qv);
  return 0.5 * s;
}

// KL divergence over p's support; q cells that are zero there are floored at
// `epsilon`. The result is clamped at zero so that numerically identical
// inputs compare as exactly consistent.
inline double kl_divergence(const DiscreteDistribution& p, const DiscreteDistribution& q,
                            double epsilon = 1e-9) {
  require_same_variables(p, q);
  double s = 0.0;
  for (const auto& [a, pv] : p.pmf()) {
    if (pv <= 0.0) continue;
    double qv = q.probability(a);
    if (qv <= 0.0) qv = epsilon;
    s += pv * std::log(pv / qv);
  }
  return std::max(s, 0.0);
}

inline bool distributions_close(const DiscreteDistribution& p, const DiscreteDistribution& q,
                                double tol = kProbTol) {
  return total_variation(p, q) <= tol;
}

}  // namespace cemb
