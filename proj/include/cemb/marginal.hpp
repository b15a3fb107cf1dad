#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cemb/common.hpp"
#include "cemb/distribution.hpp"
#include "cemb/embed_error.hpp"
#include "cemb/embedding.hpp"
#include "cemb/scm.hpp"

namespace cemb {

// Marginal models with embeddings into one shared high-level variable set,
// plus an optional candidate joint model over that set.
struct MarginalProblem {
  std::vector<Scm> models;
  std::vector<Embedding> embeddings;
  std::optional<Scm> candidate;

  void check_shape() const {
    if (models.size() != embeddings.size())
      fail(ErrorKind::InvalidArgument, "one embedding per marginal model is required");
  }
};

// One pushed-through query distribution of a transformed marginal model.
struct ReducedQuery {
  Layer layer = Layer::L1;
  std::vector<VariableId> intervened;  // X' names
  std::vector<Value> values;           // image values
  std::vector<VariableId> targets;     // Y'
  DiscreteDistribution dist;
  bool skipped = false;
  std::string skip_reason;
};

// Image model summary of one embedding application: the shared-resolution
// variable set with image ranges and the full table of L1/L2 query
// distributions obtained by evaluating low and pushing through alpha.
struct ReducedSummary {
  std::size_t model_index = 0;
  std::string model_name;
  std::vector<VariableId> variables;              // phi(R), image order
  std::map<VariableId, std::vector<Value>> ranges;  // image of each range map
  std::vector<ReducedQuery> queries;
};

namespace marginal_detail {

inline std::vector<VariableId> ordered_preimage(const Embedding& e, const Scm& low,
                                                const std::vector<VariableId>& high_vars) {
  std::set<VariableId> pre;
  for (const auto& hv : high_vars)
    for (const auto& lv : e.phi.preimage(hv)) pre.insert(lv);
  std::vector<VariableId> out;
  for (const auto& v : low.variables())
    if (pre.count(v)) out.push_back(v);
  return out;
}

}  // namespace marginal_detail

// Single-resolution reduction: each marginal model is replaced by the image
// of its embedding, so overlapping variables share one representation.
inline std::vector<ReducedSummary> reduce(const MarginalProblem& p) {
  p.check_shape();
  std::vector<ReducedSummary> out;
  for (std::size_t i = 0; i < p.models.size(); ++i) {
    const Scm& low = p.models[i];
    const Embedding& e = p.embeddings[i];
    // Image structure is defined by the low model and the maps alone.
    {
      Scm dummy_high("image");
      // Structural validation against the low side only: reuse the checker
      // with a relaxed high model carrying unbounded stand-ins.
      for (const auto& hv : e.relevant_high) dummy_high.add_variable(hv, std::nullopt);
      auto violations = validate_structure(e, low, dummy_high);
      if (!violations.empty())
        fail(ErrorKind::StructureInvalid,
             "embedding " + std::to_string(i) + ": " + violations.front().where + ": " +
                 violations.front().detail);
    }
    low.require_exact_engine();

    ReducedSummary s;
    s.model_index = i;
    s.model_name = low.name();
    s.variables = e.relevant_high;
    for (const auto& hv : e.relevant_high) {
      const RangeMap& a = e.alphas.at(hv);
      std::set<Value> image;
      std::vector<std::vector<Value>> axes;
      for (const auto& lv : a.preimage) axes.push_back(low.range(lv).values);
      std::vector<std::size_t> idx(axes.size(), 0);
      while (true) {
        std::vector<Value> tuple;
        for (std::size_t j = 0; j < axes.size(); ++j) tuple.push_back(axes[j][idx[j]]);
        image.insert(a.apply(tuple));
        std::size_t k = 0;
        while (k < axes.size()) {
          if (++idx[k] < axes[k].size()) break;
          idx[k] = 0;
          ++k;
        }
        if (k == axes.size() || axes.empty()) break;
      }
      s.ranges[hv] = std::vector<Value>(image.begin(), image.end());
    }

    detail::JointCache cache(low);
    const std::size_t n = e.relevant_high.size();
    for (Layer layer : {Layer::L1, Layer::L2}) {
      for (std::size_t xbits = 0; xbits < (std::size_t{1} << n); ++xbits) {
        std::vector<VariableId> xprime;
        for (std::size_t b = 0; b < n; ++b)
          if (xbits & (std::size_t{1} << b)) xprime.push_back(e.relevant_high[b]);
        std::vector<VariableId> xpre = marginal_detail::ordered_preimage(e, low, xprime);
        for (const auto& x : detail::assignments_over(low, xpre)) {
          std::map<VariableId, Value> low_given;
          for (std::size_t j = 0; j < xpre.size(); ++j) low_given[xpre[j]] = x[j];
          std::vector<Value> ximg;
          for (const auto& hv : xprime) {
            const RangeMap& a = e.alphas.at(hv);
            std::vector<Value> tuple;
            for (const auto& lv : a.preimage) tuple.push_back(low_given.at(lv));
            ximg.push_back(a.apply(tuple));
          }
          bool skip = layer == Layer::L1 && !xprime.empty() &&
                      cache.get({}).event_probability(low_given) <= 0.0;
          for (std::size_t ybits = 0; ybits < (std::size_t{1} << n); ++ybits) {
            std::vector<VariableId> yprime;
            for (std::size_t b = 0; b < n; ++b)
              if (ybits & (std::size_t{1} << b)) yprime.push_back(e.relevant_high[b]);
            ReducedQuery q;
            q.layer = layer;
            q.intervened = xprime;
            q.values = ximg;
            q.targets = yprime;
            if (skip) {
              q.skipped = true;
              q.skip_reason = "zero-probability conditioning event";
              s.queries.push_back(std::move(q));
              continue;
            }
            std::vector<VariableId> ypre = marginal_detail::ordered_preimage(e, low, yprime);
            DiscreteDistribution low_marg;
            if (layer == Layer::L2) {
              low_marg = cache.get(low_given).marginal(ypre);
            } else {
              const DiscreteDistribution& j = cache.get({});
              low_marg = xprime.empty() ? j.marginal(ypre) : j.condition(low_given).marginal(ypre);
            }
            std::vector<const RangeMap*> alphas;
            for (const auto& hv : yprime) alphas.push_back(&e.alphas.at(hv));
            q.dist = pushforward(alphas, low_marg);
            s.queries.push_back(std::move(q));
          }
        }
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

// True iff phi is the identity on R, every range map acts as the identity,
// and R covers all endogenous variables of the model.
inline bool is_identity_embedding(const Embedding& e, const Scm& m) {
  std::set<VariableId> all(m.variables().begin(), m.variables().end());
  if (e.relevant_low != all) return false;
  for (const auto& v : e.relevant_low) {
    auto it = e.phi.map.find(v);
    if (it == e.phi.map.end() || it->second != v) return false;
  }
  if (e.relevant_high_set() != all) return false;
  for (const auto& [hv, a] : e.alphas) {
    if (a.preimage.size() != 1 || a.preimage[0] != hv) return false;
    switch (a.kind) {
      case RangeMap::Kind::Identity:
      case RangeMap::Kind::Sum:  // a one-variable sum is the identity
        break;
      case RangeMap::Kind::Table: {
        const auto& r = m.range_opt(hv);
        if (!r) return false;
        for (Value v : r->values) {
          auto row = a.table.find({v});
          if (row == a.table.end() || row->second != v) return false;
        }
        break;
      }
    }
  }
  return true;
}

struct CertifyResult {
  bool certified = false;
  std::vector<std::string> violations;       // blocking conditions
  std::vector<std::string> overlap_notes;    // reported, never enforced
  std::vector<double> errors;                // per-embedding layer error
  std::vector<bool> identity_flags;          // per-embedding identity check
};

// Certification of a candidate joint model: every embedding must be
// layer-consistent against it (error <= 1e-9) and must cover its marginal
// model's full endogenous set. Disagreements between reduced summaries on
// shared queries are reported alongside but do not block the certificate.
inline CertifyResult certify_solution(const MarginalProblem& p, Layer layer) {
  p.check_shape();
  if (!p.candidate) fail(ErrorKind::MissingCandidate, "no candidate model to certify");
  const Scm& candidate = *p.candidate;

  CertifyResult res;
  res.certified = true;
  for (std::size_t i = 0; i < p.models.size(); ++i) {
    const Scm& low = p.models[i];
    const Embedding& e = p.embeddings[i];
    std::string tag = "embedding " + std::to_string(i) +
                      (e.name.empty() ? "" : " (" + e.name + ")");
    auto violations = validate_structure(e, low, candidate);
    if (!violations.empty()) {
      res.certified = false;
      res.violations.push_back(tag + ": structure: " + violations.front().where + ": " +
                               violations.front().detail);
      res.errors.push_back(std::numeric_limits<double>::quiet_NaN());
      res.identity_flags.push_back(false);
      continue;
    }
    ErrorReport rep = embedding_error(e, low, candidate, layer, Distance::TV);
    res.errors.push_back(rep.error);
    res.identity_flags.push_back(is_identity_embedding(e, low));
    if (rep.error > kProbTol) {
      res.certified = false;
      res.violations.push_back(tag + ": " + std::string(layer_name(layer)) + " error " +
                               format_number(rep.error) + " exceeds 1e-9; worst query " +
                               rep.witness.describe());
    }
    std::set<VariableId> all(low.variables().begin(), low.variables().end());
    if (e.relevant_low != all) {
      res.certified = false;
      res.violations.push_back(tag + ": relevant set does not cover all endogenous variables of " +
                               low.name());
    }
  }

  // Overlap consistency between reduced summaries (informational).
  std::vector<ReducedSummary> sums = reduce(p);
  for (std::size_t i = 0; i < sums.size(); ++i)
    for (std::size_t j = i + 1; j < sums.size(); ++j) {
      std::set<VariableId> shared;
      std::set<VariableId> vi(sums[i].variables.begin(), sums[i].variables.end());
      for (const auto& v : sums[j].variables)
        if (vi.count(v)) shared.insert(v);
      if (shared.empty()) continue;
      for (const auto& qa : sums[i].queries) {
        if (qa.skipped || qa.layer != layer) continue;
        bool in_shared = !qa.targets.empty();
        for (const auto& t : qa.targets) in_shared = in_shared && shared.count(t);
        for (const auto& t : qa.intervened) in_shared = in_shared && shared.count(t);
        if (!in_shared) continue;
        for (const auto& qb : sums[j].queries) {
          if (qb.skipped || qb.layer != layer) continue;
          if (qb.targets != qa.targets || qb.intervened != qa.intervened ||
              qb.values != qa.values)
            continue;
          if (qa.dist.variables() != qb.dist.variables()) continue;
          double tv = total_variation(qa.dist, qb.dist);
          if (tv > kProbTol)
            res.overlap_notes.push_back(
                "overlap: models " + std::to_string(i) + "/" + std::to_string(j) + " disagree on " +
                std::string(layer_name(layer)) + "(" + join_strings(qa.targets, ",") +
                (qa.intervened.empty()
                     ? ""
                     : " | " + join_strings(qa.intervened, ",") + "=" + join_values(qa.values, ",")) +
                ") by TV " + format_number(tv));
        }
      }
    }
  return res;
}

}  // namespace cemb
