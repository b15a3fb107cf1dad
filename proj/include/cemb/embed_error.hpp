#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cemb/common.hpp"
#include "cemb/distribution.hpp"
#include "cemb/embedding.hpp"
#include "cemb/scm.hpp"

namespace cemb {

enum class Distance { TV, KL };

inline const char* distance_name(Distance d) { return d == Distance::TV ? "tv" : "kl"; }

// KL for the embedding-error functional: cells where the second argument has
// zero mass on the first's support yield +infinity rather than a smoothed
// finite value.
inline double kl_divergence_strict(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  require_same_variables(p, q);
  double s = 0.0;
  for (const auto& [a, pv] : p.pmf()) {
    if (pv <= 0.0) continue;
    double qv = q.probability(a);
    if (qv <= 0.0) return std::numeric_limits<double>::infinity();
    s += pv * std::log(pv / qv);
  }
  return std::max(s, 0.0);
}

struct QueryRecord {
  std::vector<VariableId> intervened_high;  // X'
  std::vector<Value> low_assignment;        // x over the preimage of X'
  std::vector<Value> high_assignment;       // alpha images of x
  std::vector<VariableId> target_high;      // Y'
  double distance = 0.0;
  bool skipped = false;
  std::string skip_reason;

  std::string describe() const {
    std::string s = "X'=(" + join_strings(intervened_high, ",") + ")=(" +
                    join_values(high_assignment, ",") + ") Y'=(" +
                    join_strings(target_high, ",") + ")";
    if (skipped) return s + " skipped: " + skip_reason;
    return s + " D=" + format_number(distance);
  }
};

struct ErrorReport {
  double error = 0.0;
  QueryRecord witness;
  std::vector<QueryRecord> per_query;
  std::size_t skipped = 0;
  bool infinite = false;  // a KL query hit a zero-mass cell

  bool consistent(double tol = kProbTol) const { return error <= tol; }
};

namespace detail {

// Interventional joints are memoized per assignment; the same intervened
// model answers every (Y', x') query against it.
class JointCache {
 public:
  explicit JointCache(const Scm& model) : model_(model) {}

  const DiscreteDistribution& get(const std::map<VariableId, Value>& intervention) {
    auto it = cache_.find(intervention);
    if (it != cache_.end()) return it->second;
    DiscreteDistribution joint = intervention.empty()
                                     ? model_.joint_distribution()
                                     : model_.apply_intervention(intervention).joint_distribution();
    return cache_.emplace(intervention, std::move(joint)).first->second;
  }

 private:
  const Scm& model_;
  std::map<std::map<VariableId, Value>, DiscreteDistribution> cache_;
};

inline std::vector<std::vector<Value>> assignments_over(const Scm& model,
                                                        const std::vector<VariableId>& vars) {
  std::vector<std::vector<Value>> out;
  std::vector<std::vector<Value>> axes;
  for (const auto& v : vars) axes.push_back(model.range(v).values);
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    std::vector<Value> a;
    a.reserve(axes.size());
    for (std::size_t i = 0; i < axes.size(); ++i) a.push_back(axes[i][idx[i]]);
    out.push_back(std::move(a));
    std::size_t k = 0;
    while (k < axes.size()) {
      if (++idx[k] < axes[k].size()) break;
      idx[k] = 0;
      ++k;
    }
    if (k == axes.size() || axes.empty()) break;
  }
  return out;
}

}  // namespace detail

// Maximum distance between "embed then evaluate" and "evaluate then embed"
// over all pairs of relevant high subsets X', Y' (both may be empty or
// overlap) and all low-level assignments over the preimage of X'.
// Observational (L1) queries whose conditioning event has zero probability
// on either side are skipped and logged.
inline ErrorReport embedding_error(const Embedding& e, const Scm& low, const Scm& high,
                                   Layer layer, Distance dist = Distance::TV) {
  require_valid_structure(e, low, high);
  low.require_exact_engine();
  high.require_exact_engine();

  // Canonical orders: high subsets follow the high model declaration order,
  // preimages the low model declaration order.
  std::vector<VariableId> rp;
  for (const auto& v : high.variables())
    if (e.relevant_high_set().count(v)) rp.push_back(v);
  auto ordered_preimage = [&](const std::vector<VariableId>& high_vars) {
    std::set<VariableId> pre;
    for (const auto& hv : high_vars)
      for (const auto& lv : e.phi.preimage(hv)) pre.insert(lv);
    std::vector<VariableId> out;
    for (const auto& v : low.variables())
      if (pre.count(v)) out.push_back(v);
    return out;
  };

  detail::JointCache low_cache(low);
  detail::JointCache high_cache(high);

  ErrorReport report;
  report.error = 0.0;
  bool have_witness = false;

  const std::size_t n = rp.size();
  for (std::size_t xbits = 0; xbits < (std::size_t{1} << n); ++xbits) {
    std::vector<VariableId> xprime;
    for (std::size_t i = 0; i < n; ++i)
      if (xbits & (std::size_t{1} << i)) xprime.push_back(rp[i]);
    std::vector<VariableId> xpre = ordered_preimage(xprime);

    for (const auto& x : detail::assignments_over(low, xpre)) {
      // Image of x under the per-variable range maps.
      std::map<VariableId, Value> low_given;
      for (std::size_t i = 0; i < xpre.size(); ++i) low_given[xpre[i]] = x[i];
      std::vector<Value> ximg;
      std::map<VariableId, Value> high_given;
      for (const auto& hv : xprime) {
        const RangeMap& a = e.alphas.at(hv);
        std::vector<Value> tuple;
        tuple.reserve(a.preimage.size());
        for (const auto& lv : a.preimage) tuple.push_back(low_given.at(lv));
        Value img = a.apply(tuple);
        ximg.push_back(img);
        high_given[hv] = img;
      }

      bool skip = false;
      std::string skip_reason;
      if (layer == Layer::L1 && !xprime.empty()) {
        if (low_cache.get({}).event_probability(low_given) <= 0.0) {
          skip = true;
          skip_reason = "zero-probability low conditioning event";
        } else if (high_cache.get({}).event_probability(high_given) <= 0.0) {
          skip = true;
          skip_reason = "zero-probability high conditioning event";
        }
      }

      for (std::size_t ybits = 0; ybits < (std::size_t{1} << n); ++ybits) {
        std::vector<VariableId> yprime;
        for (std::size_t i = 0; i < n; ++i)
          if (ybits & (std::size_t{1} << i)) yprime.push_back(rp[i]);

        QueryRecord rec;
        rec.intervened_high = xprime;
        rec.low_assignment = x;
        rec.high_assignment = ximg;
        rec.target_high = yprime;

        if (skip) {
          rec.skipped = true;
          rec.skip_reason = skip_reason;
          report.per_query.push_back(std::move(rec));
          ++report.skipped;
          continue;
        }

        std::vector<VariableId> ypre = ordered_preimage(yprime);
        DiscreteDistribution high_side, low_marg;
        if (layer == Layer::L2) {
          high_side = high_cache.get(high_given).marginal(yprime);
          low_marg = low_cache.get(low_given).marginal(ypre);
        } else {
          const DiscreteDistribution& hj = high_cache.get({});
          const DiscreteDistribution& lj = low_cache.get({});
          high_side = xprime.empty() ? hj.marginal(yprime)
                                     : hj.condition(high_given).marginal(yprime);
          low_marg = xprime.empty() ? lj.marginal(ypre)
                                    : lj.condition(low_given).marginal(ypre);
        }
        std::vector<const RangeMap*> alphas;
        alphas.reserve(yprime.size());
        for (const auto& hv : yprime) alphas.push_back(&e.alphas.at(hv));
        DiscreteDistribution low_side = pushforward(alphas, low_marg);

        double d = dist == Distance::TV ? total_variation(high_side, low_side)
                                        : kl_divergence_strict(high_side, low_side);
        rec.distance = d;
        if (std::isinf(d)) report.infinite = true;
        if (!have_witness || d > report.error) {
          report.error = d;
          report.witness = rec;
          have_witness = true;
        }
        report.per_query.push_back(std::move(rec));
      }
    }
  }
  return report;
}

}  // namespace cemb
