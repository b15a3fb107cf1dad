#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cemb/common.hpp"
#include "cemb/dataset.hpp"
#include "cemb/embed_error.hpp"
#include "cemb/embedding.hpp"
#include "cemb/graph.hpp"
#include "cemb/marginal.hpp"
#include "cemb/rng.hpp"
#include "cemb/scm.hpp"

namespace cemb {

// A machine-checkable assertion about the fixtures of a bundle. Replayed
// through the library's own checkers by replay().
struct Expectation {
  enum class Kind {
    GraphEquals,
    QueryEquals,
    StructureOk,
    IsEmbeddingBoth,
    EmbedErrorAtMost,
    EmbedErrorAtLeast,
    Certify,
    QueryTvAtLeast,
    MixtureIdentity,
    IdentityFlag,
  };

  Kind kind;
  std::string description;
  std::vector<std::string> model_refs;      // kind-specific model names
  std::vector<std::string> embedding_refs;  // kind-specific embedding names
  std::string candidate_ref;                // Certify only
  Layer layer = Layer::L1;
  Distance distance = Distance::TV;
  std::vector<VariableId> targets;
  std::map<VariableId, Value> given;
  std::map<std::vector<Value>, double> expected_table;
  std::vector<std::string> expected_directed;    // "A -> B"
  std::vector<std::string> expected_bidirected;  // "A <-> B"
  bool expected_bool = true;
  double bound = 0.0;
  double tol = kProbTol;
};

struct ExpectationResult {
  std::string description;
  bool pass = false;
  std::string detail;
};

struct FixtureBundle {
  std::string name;
  std::map<std::string, Scm> models;
  std::map<std::string, Embedding> embeddings;
  std::map<std::string, CausalGraph> graphs;
  std::vector<Expectation> expected;
};

namespace fixture_detail {

inline Embedding identity_embedding_over(const Scm& model, const std::string& name) {
  Embedding e = Embedding::identity_of(model);
  e.name = name;
  return e;
}

inline TabularPmf uniform_pmf(Value lo, Value hi) {
  TabularPmf p;
  double w = 1.0 / static_cast<double>(hi - lo + 1);
  for (Value v = lo; v <= hi; ++v) p.entries.emplace_back(v, w);
  return p;
}

// Threshold row helper: target is 1 when the noise index is at or above
// `cut`, over noise support 0..n-1.
inline void threshold_rows(TabularMap& t, const std::vector<Value>& prefix, Value n, Value cut) {
  for (Value u = 0; u < n; ++u) {
    std::vector<Value> key = prefix;
    key.push_back(u);
    t.rows[key] = u >= cut ? 1 : 0;
  }
}

}  // namespace fixture_detail

// ---------------------------------------------------------------------------
// Counterexample pair: a functionally interventionally consistent map whose
// high-level graph misses a required edge.
// ---------------------------------------------------------------------------

inline Scm b3_low_model() {
  Scm m("b3_low");
  m.add_variable("X", ValueRange::of({0, 2, 4}));
  m.add_variable("Y", ValueRange::of({0, 1}));
  m.add_variable("Z", ValueRange::of({0, 1, 2, 3, 4, 5}));
  m.add_exogenous({"U_X", TabularPmf{{{0, 1.0 / 3}, {2, 1.0 / 3}, {4, 1.0 / 3}}}});
  m.add_exogenous({"U_Y", TabularPmf{{{0, 0.5}, {1, 0.5}}}});
  m.set_function({"X", {}, {"U_X"}, parse_expr("U_X")});
  m.set_function({"Y", {}, {"U_Y"}, parse_expr("U_Y")});
  m.set_function({"Z", {"X", "Y"}, {}, parse_expr("X + Y")});
  m.validate();
  return m;
}

inline Scm b3_high_model() {
  Scm m("b3_high");
  m.add_variable("Xp", ValueRange::of({0, 2, 4}));
  m.add_variable("Yp", ValueRange::of({0, 1}));
  m.add_variable("Zp", ValueRange::of({0, 1}));
  m.add_exogenous({"U_Xp", TabularPmf{{{0, 1.0 / 3}, {2, 1.0 / 3}, {4, 1.0 / 3}}}});
  m.add_exogenous({"U_Yp", TabularPmf{{{0, 0.5}, {1, 0.5}}}});
  m.set_function({"Xp", {}, {"U_Xp"}, parse_expr("U_Xp")});
  m.set_function({"Yp", {}, {"U_Yp"}, parse_expr("U_Yp")});
  m.set_function({"Zp", {"Yp"}, {}, parse_expr("Yp")});
  m.validate();
  return m;
}

inline Embedding b3_embedding() {
  Embedding e;
  e.name = "b3_alpha";
  e.relevant_low = {"X", "Y", "Z"};
  e.relevant_high = {"Xp", "Yp", "Zp"};
  e.phi.domain = e.relevant_low;
  e.phi.codomain = {"Xp", "Yp", "Zp"};
  e.phi.map = {{"X", "Xp"}, {"Y", "Yp"}, {"Z", "Zp"}};
  e.alphas["Xp"] = RangeMap::identity("Xp", "X");
  e.alphas["Yp"] = RangeMap::identity("Yp", "Y");
  e.alphas["Zp"] = RangeMap::tabular(
      "Zp", {"Z"}, {{{0}, 0}, {{1}, 1}, {{2}, 0}, {{3}, 1}, {{4}, 0}, {{5}, 1}});
  return e;
}

inline FixtureBundle counterexample_b3() {
  FixtureBundle b;
  b.name = "b3";
  b.models["low"] = b3_low_model();
  b.models["high"] = b3_high_model();
  b.embeddings["alpha"] = b3_embedding();

  Expectation g1{Expectation::Kind::GraphEquals, "low graph is {X->Z, Y->Z}", {"low"}};
  g1.expected_directed = {"X -> Z", "Y -> Z"};
  b.expected.push_back(g1);

  Expectation g2{Expectation::Kind::GraphEquals, "high graph is {Yp->Zp}", {"high"}};
  g2.expected_directed = {"Yp -> Zp"};
  b.expected.push_back(g2);

  Expectation q1{Expectation::Kind::QueryEquals, "P(Z) is uniform over 0..5", {"low"}};
  q1.layer = Layer::L1;
  q1.targets = {"Z"};
  for (Value z = 0; z <= 5; ++z) q1.expected_table[{z}] = 1.0 / 6;
  q1.tol = 1e-12;
  b.expected.push_back(q1);

  Expectation q2{Expectation::Kind::QueryEquals, "P(Z | do(X=2)) is half on 2 and half on 3",
                 {"low"}};
  q2.layer = Layer::L2;
  q2.targets = {"Z"};
  q2.given = {{"X", 2}};
  q2.expected_table = {{{2}, 0.5}, {{3}, 0.5}};
  q2.tol = 1e-12;
  b.expected.push_back(q2);

  Expectation q3{Expectation::Kind::QueryEquals, "P(Z | do(X=4)) is uniform on {4,5}", {"low"}};
  q3.layer = Layer::L2;
  q3.targets = {"Z"};
  q3.given = {{"X", 4}};
  q3.expected_table = {{{4}, 0.5}, {{5}, 0.5}};
  q3.tol = 1e-12;
  b.expected.push_back(q3);

  Expectation q4{Expectation::Kind::QueryEquals,
                 "high joint: independent uniform X', Z' copies Y'", {"high"}};
  q4.layer = Layer::L1;
  q4.targets = {"Xp", "Yp", "Zp"};
  for (Value x : {0, 2, 4})
    for (Value y : {0, 1}) q4.expected_table[{x, y, y}] = 1.0 / 6;
  q4.tol = 1e-12;
  b.expected.push_back(q4);

  Expectation s{Expectation::Kind::StructureOk, "alpha passes structural validation",
                {"low", "high"}, {"alpha"}};
  s.expected_bool = true;
  b.expected.push_back(s);

  Expectation err{Expectation::Kind::EmbedErrorAtMost,
                  "alpha is interventionally consistent (L2 error within 1e-12)",
                  {"low", "high"},
                  {"alpha"}};
  err.layer = Layer::L2;
  err.bound = 1e-12;
  b.expected.push_back(err);

  Expectation emb{Expectation::Kind::IsEmbeddingBoth,
                  "alpha is rejected by both embedding checks", {"low", "high"}, {"alpha"}};
  emb.expected_bool = false;
  b.expected.push_back(emb);

  return b;
}

// ---------------------------------------------------------------------------
// Non-uniqueness pair: two candidate joint models over X -> Y -> Z with a
// direct X -> Z edge, agreeing with the marginal models' tables under the
// published mixture identity yet assigning different P(Z | X, Y).
//
// Note: with the published context-dependent table (p2), the identity
// weights by P(X) rather than P(X | Y); the realized model then shifts
// P(Z | Y) away from the marginal model's table, so faithful certification
// rejects it. The bundle records the verified verdicts; an additional
// candidate (ctx) reweighted by P(X | Y) certifies and still differs from
// p1, exhibiting non-uniqueness.
// ---------------------------------------------------------------------------

inline Scm c1_m1() {
  using fixture_detail::threshold_rows;
  Scm m("c1_m1");
  m.add_variable("X", ValueRange::of({0, 1}));
  m.add_variable("Y", ValueRange::of({0, 1}));
  m.add_exogenous({"U_X", TabularPmf{{{0, 0.4}, {1, 0.6}}}});
  m.add_exogenous({"U_Y", fixture_detail::uniform_pmf(0, 9)});
  m.set_function({"X", {}, {"U_X"}, parse_expr("U_X")});
  TabularMap fy;
  threshold_rows(fy, {0}, 10, 7);  // P(Y=1 | X=0) = 0.3
  threshold_rows(fy, {1}, 10, 4);  // P(Y=1 | X=1) = 0.6
  m.set_function({"Y", {"X"}, {"U_Y"}, fy});
  m.validate();
  return m;
}

inline Scm c1_m2() {
  using fixture_detail::threshold_rows;
  Scm m("c1_m2");
  m.add_variable("Y", ValueRange::of({0, 1}));
  m.add_variable("Z", ValueRange::of({0, 1}));
  m.add_exogenous({"U_Y", TabularPmf{{{0, 0.52}, {1, 0.48}}}});
  m.add_exogenous({"U_Z", fixture_detail::uniform_pmf(0, 9)});
  m.set_function({"Y", {}, {"U_Y"}, parse_expr("U_Y")});
  TabularMap fz;
  threshold_rows(fz, {0}, 10, 6);  // P(Z=1 | Y=0) = 0.4
  threshold_rows(fz, {1}, 10, 3);  // P(Z=1 | Y=1) = 0.7
  m.set_function({"Z", {"Y"}, {"U_Z"}, fz});
  m.validate();
  return m;
}

// Candidate skeleton: X -> Y, X -> Z, Y -> Z with P(X), P(Y|X) as in the
// first marginal model and P(Z | Y, X) given in thirtieths of probability
// mass for each (y, x) row.
inline Scm c1_candidate(const std::string& name, Value c00, Value c01, Value c10, Value c11) {
  using fixture_detail::threshold_rows;
  Scm m(name);
  m.add_variable("X", ValueRange::of({0, 1}));
  m.add_variable("Y", ValueRange::of({0, 1}));
  m.add_variable("Z", ValueRange::of({0, 1}));
  m.add_exogenous({"U_X", TabularPmf{{{0, 0.4}, {1, 0.6}}}});
  m.add_exogenous({"U_Y", fixture_detail::uniform_pmf(0, 9)});
  m.add_exogenous({"U_Z", fixture_detail::uniform_pmf(0, 29)});
  m.set_function({"X", {}, {"U_X"}, parse_expr("U_X")});
  TabularMap fy;
  threshold_rows(fy, {0}, 10, 7);
  threshold_rows(fy, {1}, 10, 4);
  m.set_function({"Y", {"X"}, {"U_Y"}, fy});
  TabularMap fz;
  threshold_rows(fz, {0, 0}, 30, c00);  // keys (X, Y, U_Z)
  threshold_rows(fz, {0, 1}, 30, c10);
  threshold_rows(fz, {1, 0}, 30, c01);
  threshold_rows(fz, {1, 1}, 30, c11);
  m.set_function({"Z", {"X", "Y"}, {"U_Z"}, fz});
  m.validate();
  return m;
}

inline FixtureBundle nonuniqueness_c1() {
  FixtureBundle b;
  b.name = "c1";
  b.models["m1"] = c1_m1();
  b.models["m2"] = c1_m2();
  // P1: context-independent, P(Z=0 | y, x) = 0.6 / 0.6 / 0.3 / 0.3.
  b.models["mp_p1"] = c1_candidate("c1_mp_p1", 18, 18, 9, 9);
  // P2 as published: P(Z=0 | y, x) = 0.4, 11/15, 0.2, 11/30; satisfies the
  // P(X)-weighted mixture identity.
  b.models["mp_p2"] = c1_candidate("c1_mp_p2", 12, 22, 6, 11);
  // Reweighted variant consistent under P(X | Y): 0.4, 5/6, 0.2, 1/3.
  b.models["mp_ctx"] = c1_candidate("c1_mp_ctx", 12, 25, 6, 10);

  {
    Embedding a1;
    a1.name = "c1_a1";
    a1.relevant_low = {"X", "Y"};
    a1.relevant_high = {"X", "Y"};
    a1.phi = VariableMap::identity(a1.relevant_low);
    a1.alphas["X"] = RangeMap::identity("X", "X");
    a1.alphas["Y"] = RangeMap::identity("Y", "Y");
    b.embeddings["a1"] = a1;
  }
  {
    Embedding a2;
    a2.name = "c1_a2";
    a2.relevant_low = {"Y", "Z"};
    a2.relevant_high = {"Y", "Z"};
    a2.phi = VariableMap::identity(a2.relevant_low);
    a2.alphas["Y"] = RangeMap::identity("Y", "Y");
    a2.alphas["Z"] = RangeMap::identity("Z", "Z");
    b.embeddings["a2"] = a2;
  }

  Expectation py{Expectation::Kind::QueryEquals, "P(Y) recomputed from P(X), P(Y|X)", {"m1"}};
  py.targets = {"Y"};
  py.expected_table = {{{0}, 0.52}, {{1}, 0.48}};
  py.tol = 1e-12;
  b.expected.push_back(py);

  Expectation pz{Expectation::Kind::QueryEquals, "P(Z) recomputed from P(Y), P(Z|Y)", {"m2"}};
  pz.targets = {"Z"};
  pz.expected_table = {{{0}, 0.456}, {{1}, 0.544}};
  pz.tol = 1e-12;
  b.expected.push_back(pz);

  Expectation row{Expectation::Kind::QueryEquals, "first candidate row P1(Z | Y=1, X=1)",
                  {"mp_p1"}};
  row.targets = {"Z"};
  row.given = {{"Y", 1}, {"X", 1}};
  row.expected_table = {{{0}, 0.3}, {{1}, 0.7}};
  row.tol = 1e-12;
  b.expected.push_back(row);

  for (const char* cand : {"mp_p1", "mp_p2"}) {
    Expectation mix{Expectation::Kind::MixtureIdentity,
                    std::string("published mixture identity holds for ") + cand,
                    {cand, "m2"}};
    mix.tol = 1e-12;
    b.expected.push_back(mix);
  }

  Expectation c1ok{Expectation::Kind::Certify, "candidate p1 certifies at L1", {"m1", "m2"},
                   {"a1", "a2"}};
  c1ok.candidate_ref = "mp_p1";
  c1ok.layer = Layer::L1;
  c1ok.expected_bool = true;
  b.expected.push_back(c1ok);

  Expectation c2bad{Expectation::Kind::Certify,
                    "candidate p2 (published) fails faithful L1 certification", {"m1", "m2"},
                    {"a1", "a2"}};
  c2bad.candidate_ref = "mp_p2";
  c2bad.layer = Layer::L1;
  c2bad.expected_bool = false;
  b.expected.push_back(c2bad);

  Expectation e2{Expectation::Kind::EmbedErrorAtLeast,
                 "published p2 shifts P(Z|Y) by at least 0.04", {"m2", "mp_p2"}, {"a2"}};
  e2.layer = Layer::L1;
  e2.bound = 0.04;
  b.expected.push_back(e2);

  Expectation c3ok{Expectation::Kind::Certify, "reweighted candidate ctx certifies at L1",
                   {"m1", "m2"}, {"a1", "a2"}};
  c3ok.candidate_ref = "mp_ctx";
  c3ok.layer = Layer::L1;
  c3ok.expected_bool = true;
  b.expected.push_back(c3ok);

  for (const char* other : {"mp_p2", "mp_ctx"}) {
    Expectation tv{Expectation::Kind::QueryTvAtLeast,
                   std::string("P(Z | X=0, Y=0) differs from p1 by TV >= 0.1 in ") + other,
                   {"mp_p1", other}};
    tv.targets = {"Z"};
    tv.given = {{"X", 0}, {"Y", 0}};
    tv.bound = 0.1;
    b.expected.push_back(tv);
  }

  Expectation idf{Expectation::Kind::IdentityFlag, "a1 is an identity embedding of m1", {"m1"},
                  {"a1"}};
  idf.expected_bool = true;
  b.expected.push_back(idf);

  return b;
}

// ---------------------------------------------------------------------------
// Ecosystem: the continuous data-generation model, desk-scale discrete
// analogues of the two detailed models and the coarse model, and the two
// embeddings (identity maps, and sums over subspecies/predators).
// ---------------------------------------------------------------------------

inline Scm ecosystem_ground_truth() {
  Scm m("ecosystem_ground_truth");
  for (const char* v : {"Wolves", "Eagles", "FallowDeer", "RedDeer", "Squirrels", "Humans",
                        "Berries"})
    m.add_variable(v, std::nullopt);
  m.add_exogenous({"U_Wolves", NormalLaw{1.0, 0.20}});
  m.add_exogenous({"U_Eagles", NormalLaw{1.0, 0.15}});
  m.add_exogenous({"U_Humans", NormalLaw{1.0, 0.25}});
  m.add_exogenous({"U_Berries", NormalLaw{1.0, 0.25}});
  m.set_function({"Wolves", {}, {"U_Wolves"}, parse_expr("100 * max(U_Wolves, 0.1)")});
  m.set_function({"Eagles", {}, {"U_Eagles"}, parse_expr("10 * max(U_Eagles, 0.1)")});
  m.set_function({"Humans", {}, {"U_Humans"}, parse_expr("15 * max(U_Humans, 0.1)")});
  m.set_function({"Berries", {}, {"U_Berries"}, parse_expr("max(U_Berries, 0.1)")});
  m.set_function({"FallowDeer",
                  {"Berries", "Wolves", "Eagles", "Humans"},
                  {},
                  parse_expr("max(300 * Berries - Wolves - 2 * Eagles - 3 * Humans, 0)")});
  m.set_function({"RedDeer",
                  {"Berries", "Wolves", "Humans"},
                  {},
                  parse_expr("max(200 * Berries - Wolves - 3 * Humans, 0)")});
  m.set_function({"Squirrels",
                  {"Berries", "Eagles", "FallowDeer", "Humans"},
                  {},
                  parse_expr("max(200 * Berries - 5 * Eagles - 4 * Humans - 0.5 * FallowDeer, 0)")});
  m.set_integer_outputs(true);
  m.validate();
  return m;
}

struct EcosystemDatasets {
  Dataset x1;    // 2000 rows at the first detailed model's schema
  Dataset x2;    // 4000 rows at the second detailed model's schema
  Dataset eval;  // 100000 rows over every variable plus derived aggregates
};

namespace fixture_detail {

inline Dataset select_columns(const Dataset& d, const std::vector<VariableId>& cols) {
  Dataset out;
  out.columns = cols;
  std::vector<std::size_t> idx;
  for (const auto& c : cols) idx.push_back(d.column_index(c));
  out.rows.reserve(d.rows.size());
  for (const auto& row : d.rows) {
    Dataset::Row r;
    r.reserve(idx.size());
    for (std::size_t i : idx) r.push_back(row[i]);
    out.rows.push_back(std::move(r));
  }
  return out;
}

inline void add_sum_column(Dataset& d, const VariableId& name, const VariableId& a,
                           const VariableId& b) {
  std::size_t ia = d.column_index(a), ib = d.column_index(b);
  d.columns.push_back(name);
  for (auto& row : d.rows) {
    if (row[ia] && row[ib])
      row.push_back(*row[ia] + *row[ib]);
    else
      row.push_back(std::nullopt);
  }
}

}  // namespace fixture_detail

// Three independently seeded draws from the ground-truth model. The first
// dataset follows the detailed-model figure (Humans, Berries, aggregated
// Deer, Squirrels); `x1_prose` switches to the alternative column set that
// drops Humans and Berries and keeps the subspecies columns.
inline EcosystemDatasets generate_ecosystem_datasets(std::uint64_t seed, bool x1_prose = false) {
  Scm gt = ecosystem_ground_truth();
  std::uint64_t s1 = rng::mix(seed, rng::stream_id("ecosystem/x1"), 0);
  std::uint64_t s2 = rng::mix(seed, rng::stream_id("ecosystem/x2"), 0);
  std::uint64_t s3 = rng::mix(seed, rng::stream_id("ecosystem/eval"), 0);

  Dataset raw1 = gt.sample(2000, s1);
  Dataset raw2 = gt.sample(4000, s2);
  Dataset raweval = gt.sample(100000, s3);

  EcosystemDatasets out;
  if (x1_prose) {
    out.x1 = fixture_detail::select_columns(
        raw1, {"Wolves", "Eagles", "RedDeer", "FallowDeer", "Squirrels"});
  } else {
    fixture_detail::add_sum_column(raw1, "Deer", "FallowDeer", "RedDeer");
    out.x1 = fixture_detail::select_columns(raw1, {"Humans", "Berries", "Deer", "Squirrels"});
  }
  out.x2 = fixture_detail::select_columns(
      raw2, {"Wolves", "Eagles", "RedDeer", "FallowDeer", "Squirrels"});
  fixture_detail::add_sum_column(raweval, "Deer", "FallowDeer", "RedDeer");
  fixture_detail::add_sum_column(raweval, "Predators", "Wolves", "Eagles");
  out.eval = raweval;
  return out;
}

// Small finite-range analogues of the two detailed ecosystem models and the
// coarse model, with the exact published graph shapes.
inline Scm ecosystem_discrete_m1() {
  Scm m("eco_m1");
  m.add_variable("Humans", ValueRange::of({0, 1}));
  m.add_variable("Berries", ValueRange::of({0, 1}));
  m.add_variable("Deer", ValueRange::of({0, 1, 2}));
  m.add_variable("Squirrels", ValueRange::of({0, 1}));
  m.add_exogenous({"U_H", TabularPmf{{{0, 0.5}, {1, 0.5}}}});
  m.add_exogenous({"U_B", TabularPmf{{{0, 0.3}, {1, 0.7}}}});
  m.set_function({"Humans", {}, {"U_H"}, parse_expr("U_H")});
  m.set_function({"Berries", {}, {"U_B"}, parse_expr("U_B")});
  m.set_function({"Deer", {"Humans", "Berries"}, {}, parse_expr("Berries + 1 - Humans")});
  TabularMap fs;  // keys (Humans, Berries, Deer)
  for (Value h : {0, 1})
    for (Value b : {0, 1})
      for (Value d : {0, 1, 2}) fs.rows[{h, b, d}] = (h + b + d) % 2;
  m.set_function({"Squirrels", {"Humans", "Berries", "Deer"}, {}, fs});
  m.validate();
  return m;
}

inline Scm ecosystem_discrete_m2() {
  Scm m("eco_m2");
  m.add_variable("Wolves", ValueRange::of({0, 1}));
  m.add_variable("Eagles", ValueRange::of({0, 1}));
  m.add_variable("RedDeer", ValueRange::of({0, 1}));
  m.add_variable("FallowDeer", ValueRange::of({0, 1}));
  m.add_variable("Squirrels", ValueRange::of({0, 1}));
  m.add_exogenous({"U_W", TabularPmf{{{0, 0.5}, {1, 0.5}}}});
  m.add_exogenous({"U_E", TabularPmf{{{0, 0.4}, {1, 0.6}}}});
  // One shared habitat disturbance: confounds both deer species and the
  // squirrels, giving the three dashed edges of the published diagram.
  m.add_exogenous({"U_C", TabularPmf{{{0, 0.5}, {1, 0.5}}}});
  m.set_function({"Wolves", {}, {"U_W"}, parse_expr("U_W")});
  m.set_function({"Eagles", {}, {"U_E"}, parse_expr("U_E")});
  TabularMap frd;  // keys (Wolves, U_C)
  for (Value w : {0, 1})
    for (Value c : {0, 1}) frd.rows[{w, c}] = (1 - w) * c;
  m.set_function({"RedDeer", {"Wolves"}, {"U_C"}, frd});
  TabularMap ffd;  // keys (Wolves, Eagles, U_C)
  for (Value w : {0, 1})
    for (Value e : {0, 1})
      for (Value c : {0, 1}) ffd.rows[{w, e, c}] = c == 1 && w == 0 && e == 0 ? 1 : 0;
  m.set_function({"FallowDeer", {"Wolves", "Eagles"}, {"U_C"}, ffd});
  TabularMap fsq;  // keys (Eagles, FallowDeer, U_C)
  for (Value e : {0, 1})
    for (Value f : {0, 1})
      for (Value c : {0, 1}) fsq.rows[{e, f, c}] = (e + f + c) % 2;
  m.set_function({"Squirrels", {"Eagles", "FallowDeer"}, {"U_C"}, fsq});
  m.validate();
  return m;
}

inline Scm ecosystem_discrete_high() {
  Scm m("eco_high");
  m.add_variable("Humans", ValueRange::of({0, 1}));
  m.add_variable("Predators", ValueRange::of({0, 1, 2}));
  m.add_variable("Deer", ValueRange::of({0, 1, 2}));
  m.add_variable("Squirrels", ValueRange::of({0, 1}));
  m.add_exogenous({"U_H", TabularPmf{{{0, 0.5}, {1, 0.5}}}});
  m.add_exogenous({"U_P", TabularPmf{{{0, 0.25}, {1, 0.5}, {2, 0.25}}}});
  m.add_exogenous({"U_DS", TabularPmf{{{0, 0.5}, {1, 0.5}}}});
  m.set_function({"Humans", {}, {"U_H"}, parse_expr("U_H")});
  m.set_function({"Predators", {}, {"U_P"}, parse_expr("U_P")});
  TabularMap fd;  // keys (Humans, Predators, U_DS)
  for (Value h : {0, 1})
    for (Value p : {0, 1, 2})
      for (Value c : {0, 1}) fd.rows[{h, p, c}] = std::max<Value>(0, 2 - h - p + c - 1);
  m.set_function({"Deer", {"Humans", "Predators"}, {"U_DS"}, fd});
  TabularMap fs;  // keys (Humans, Predators, Deer, U_DS)
  for (Value h : {0, 1})
    for (Value p : {0, 1, 2})
      for (Value d : {0, 1, 2})
        for (Value c : {0, 1}) fs.rows[{h, p, d, c}] = (h + p + d + c) % 2;
  m.set_function({"Squirrels", {"Humans", "Predators", "Deer"}, {"U_DS"}, fs});
  m.validate();
  return m;
}

inline Embedding ecosystem_embedding_a1() {
  Embedding e;
  e.name = "eco_a1";
  e.relevant_low = {"Humans", "Deer", "Squirrels"};
  e.relevant_high = {"Humans", "Deer", "Squirrels"};
  e.phi.domain = e.relevant_low;
  e.phi.codomain = {"Humans", "Deer", "Squirrels"};
  e.phi.map = {{"Humans", "Humans"}, {"Deer", "Deer"}, {"Squirrels", "Squirrels"}};
  e.alphas["Humans"] = RangeMap::identity("Humans", "Humans");
  e.alphas["Deer"] = RangeMap::identity("Deer", "Deer");
  e.alphas["Squirrels"] = RangeMap::identity("Squirrels", "Squirrels");
  return e;
}

inline Embedding ecosystem_embedding_a2() {
  Embedding e;
  e.name = "eco_a2";
  e.relevant_low = {"Wolves", "Eagles", "RedDeer", "FallowDeer", "Squirrels"};
  e.relevant_high = {"Predators", "Deer", "Squirrels"};
  e.phi.domain = e.relevant_low;
  e.phi.codomain = {"Predators", "Deer", "Squirrels"};
  e.phi.map = {{"Wolves", "Predators"},
               {"Eagles", "Predators"},
               {"RedDeer", "Deer"},
               {"FallowDeer", "Deer"},
               {"Squirrels", "Squirrels"}};
  e.alphas["Predators"] = RangeMap::sum("Predators", {"Wolves", "Eagles"});
  e.alphas["Deer"] = RangeMap::sum("Deer", {"RedDeer", "FallowDeer"});
  e.alphas["Squirrels"] = RangeMap::identity("Squirrels", "Squirrels");
  return e;
}

inline FixtureBundle ecosystem_bundle() {
  FixtureBundle b;
  b.name = "ecosystem";
  b.models["ground_truth"] = ecosystem_ground_truth();
  b.models["m1"] = ecosystem_discrete_m1();
  b.models["m2"] = ecosystem_discrete_m2();
  b.models["high"] = ecosystem_discrete_high();
  b.embeddings["a1"] = ecosystem_embedding_a1();
  b.embeddings["a2"] = ecosystem_embedding_a2();

  Expectation gt{Expectation::Kind::GraphEquals,
                 "ground-truth graph has the published 11 directed edges", {"ground_truth"}};
  gt.expected_directed = {"Berries -> FallowDeer", "Berries -> RedDeer", "Berries -> Squirrels",
                          "Eagles -> FallowDeer",  "Eagles -> Squirrels", "FallowDeer -> Squirrels",
                          "Humans -> FallowDeer",  "Humans -> RedDeer",   "Humans -> Squirrels",
                          "Wolves -> FallowDeer",  "Wolves -> RedDeer"};
  b.expected.push_back(gt);

  Expectation g1{Expectation::Kind::GraphEquals, "first detailed model graph", {"m1"}};
  g1.expected_directed = {"Berries -> Deer", "Berries -> Squirrels", "Deer -> Squirrels",
                          "Humans -> Deer", "Humans -> Squirrels"};
  b.expected.push_back(g1);

  Expectation g2{Expectation::Kind::GraphEquals, "second detailed model graph", {"m2"}};
  g2.expected_directed = {"Eagles -> FallowDeer", "Eagles -> Squirrels",
                          "FallowDeer -> Squirrels", "Wolves -> FallowDeer", "Wolves -> RedDeer"};
  g2.expected_bidirected = {"FallowDeer <-> RedDeer", "FallowDeer <-> Squirrels",
                            "RedDeer <-> Squirrels"};
  b.expected.push_back(g2);

  Expectation gh{Expectation::Kind::GraphEquals, "coarse model graph", {"high"}};
  gh.expected_directed = {"Deer -> Squirrels", "Humans -> Deer", "Humans -> Squirrels",
                          "Predators -> Deer", "Predators -> Squirrels"};
  gh.expected_bidirected = {"Deer <-> Squirrels"};
  b.expected.push_back(gh);

  for (const char* name : {"a1", "a2"}) {
    Expectation s{Expectation::Kind::StructureOk,
                  std::string(name) + " passes structural validation",
                  {name == std::string("a1") ? "m1" : "m2", "high"},
                  {name}};
    s.expected_bool = true;
    b.expected.push_back(s);
    Expectation emb{Expectation::Kind::IsEmbeddingBoth,
                    std::string(name) + " is accepted by both embedding checks",
                    {name == std::string("a1") ? "m1" : "m2", "high"},
                    {name}};
    emb.expected_bool = true;
    b.expected.push_back(emb);
  }

  Expectation idf{Expectation::Kind::IdentityFlag, "the sum-aggregating map is not an identity",
                  {"m2"}, {"a2"}};
  idf.expected_bool = false;
  b.expected.push_back(idf);

  return b;
}

// Worked-diagram graphs: the low-level model with a four-variable relevant
// set and the high-level counterpart whose extra vertices mediate, confound
// or hang off the relevant ones.
inline CausalGraph diagram_low_graph() {
  CausalGraph g({"X1", "X2", "Y", "W", "Z"});
  g.add_directed("X1", "X2");
  g.add_directed("X2", "W");
  g.add_directed("W", "Z");
  g.add_directed("X1", "Y");
  g.add_bidirected("Y", "W");
  return g;
}

inline CausalGraph diagram_high_graph() {
  CausalGraph g({"Xp", "Yp", "Wp", "b1", "b2", "b3", "b4", "b5", "b6", "b7"});
  g.add_directed("b1", "Xp");
  g.add_directed("Xp", "b2");
  g.add_directed("b2", "Wp");
  g.add_directed("Xp", "Yp");
  g.add_directed("Xp", "b3");
  g.add_directed("b3", "b4");
  g.add_directed("b4", "Yp");
  g.add_directed("b5", "Yp");
  g.add_directed("b5", "Wp");
  g.add_directed("Yp", "b6");
  g.add_directed("Xp", "b7");
  g.add_directed("Wp", "b7");
  g.add_directed("b2", "b7");
  return g;
}

inline VariableMap diagram_phi() {
  VariableMap phi;
  phi.domain = {"X1", "X2", "Y", "W"};
  phi.codomain = {"Xp", "Yp", "Wp"};
  phi.map = {{"X1", "Xp"}, {"X2", "Xp"}, {"Y", "Yp"}, {"W", "Wp"}};
  return phi;
}

// ---------------------------------------------------------------------------
// Replay: evaluate every expectation through the library's own checkers.
// ---------------------------------------------------------------------------

inline std::vector<ExpectationResult> replay(const FixtureBundle& b) {
  std::vector<ExpectationResult> results;
  for (const auto& ex : b.expected) {
    ExpectationResult r;
    r.description = ex.description;
    try {
      switch (ex.kind) {
        case Expectation::Kind::GraphEquals: {
          const Scm& m = b.models.at(ex.model_refs.at(0));
          CausalGraph g = m.induced_graph();
          std::vector<std::string> dir, bid;
          for (const auto& [a, c] : g.directed()) dir.push_back(a + " -> " + c);
          for (const auto& [a, c] : g.bidirected()) bid.push_back(a + " <-> " + c);
          std::vector<std::string> want_dir = ex.expected_directed;
          std::vector<std::string> want_bid = ex.expected_bidirected;
          std::sort(want_dir.begin(), want_dir.end());
          std::sort(want_bid.begin(), want_bid.end());
          r.pass = dir == want_dir && bid == want_bid;
          if (!r.pass)
            r.detail = "got directed {" + join_strings(dir, ", ") + "}, bidirected {" +
                       join_strings(bid, ", ") + "}";
          break;
        }
        case Expectation::Kind::QueryEquals: {
          const Scm& m = b.models.at(ex.model_refs.at(0));
          std::set<VariableId> targets(ex.targets.begin(), ex.targets.end());
          DiscreteDistribution got = m.query(targets, ex.layer, ex.given);
          double worst = 0.0;
          for (const auto& [a, p] : ex.expected_table)
            worst = std::max(worst, std::fabs(got.probability(a) - p));
          for (const auto& [a, p] : got.pmf())
            if (!ex.expected_table.count(a)) worst = std::max(worst, std::fabs(p));
          r.pass = worst <= ex.tol;
          if (!r.pass) r.detail = "max cell deviation " + format_number(worst);
          break;
        }
        case Expectation::Kind::StructureOk: {
          const Scm& low = b.models.at(ex.model_refs.at(0));
          const Scm& high = b.models.at(ex.model_refs.at(1));
          auto v = validate_structure(b.embeddings.at(ex.embedding_refs.at(0)), low, high);
          r.pass = v.empty() == ex.expected_bool;
          if (!v.empty()) r.detail = v.front().where + ": " + v.front().detail;
          break;
        }
        case Expectation::Kind::IsEmbeddingBoth: {
          const Scm& low = b.models.at(ex.model_refs.at(0));
          const Scm& high = b.models.at(ex.model_refs.at(1));
          const Embedding& e = b.embeddings.at(ex.embedding_refs.at(0));
          auto vp = is_embedding(e, low, high, EmbeddingMethod::Projection);
          auto vm = is_embedding(e, low, high, EmbeddingMethod::Mediated);
          r.pass = vp.ok == vm.ok && vp.ok == ex.expected_bool;
          if (!r.pass)
            r.detail = "projection=" + std::to_string(vp.ok) +
                       " mediated=" + std::to_string(vm.ok);
          break;
        }
        case Expectation::Kind::EmbedErrorAtMost:
        case Expectation::Kind::EmbedErrorAtLeast: {
          const Scm& low = b.models.at(ex.model_refs.at(0));
          const Scm& high = b.models.at(ex.model_refs.at(1));
          ErrorReport rep = embedding_error(b.embeddings.at(ex.embedding_refs.at(0)), low, high,
                                            ex.layer, ex.distance);
          r.pass = ex.kind == Expectation::Kind::EmbedErrorAtMost ? rep.error <= ex.bound
                                                                  : rep.error >= ex.bound;
          r.detail = "error " + format_number(rep.error);
          break;
        }
        case Expectation::Kind::Certify: {
          MarginalProblem p;
          for (const auto& mr : ex.model_refs) p.models.push_back(b.models.at(mr));
          for (const auto& er : ex.embedding_refs) p.embeddings.push_back(b.embeddings.at(er));
          p.candidate = b.models.at(ex.candidate_ref);
          CertifyResult res = certify_solution(p, ex.layer);
          r.pass = res.certified == ex.expected_bool;
          if (!res.violations.empty()) r.detail = res.violations.front();
          break;
        }
        case Expectation::Kind::QueryTvAtLeast: {
          const Scm& a = b.models.at(ex.model_refs.at(0));
          const Scm& c = b.models.at(ex.model_refs.at(1));
          std::set<VariableId> targets(ex.targets.begin(), ex.targets.end());
          double tv = total_variation(a.query(targets, ex.layer, ex.given),
                                      c.query(targets, ex.layer, ex.given));
          r.pass = tv >= ex.bound;
          r.detail = "TV " + format_number(tv);
          break;
        }
        case Expectation::Kind::MixtureIdentity: {
          const Scm& cand = b.models.at(ex.model_refs.at(0));
          const Scm& ref = b.models.at(ex.model_refs.at(1));
          DiscreteDistribution px = cand.query({"X"}, Layer::L1, {});
          double worst = 0.0;
          for (Value y : {0, 1}) {
            DiscreteDistribution pzy = ref.query({"Z"}, Layer::L1, {{"Y", y}});
            for (Value z : {0, 1}) {
              double mix = 0.0;
              for (Value x : {0, 1}) {
                DiscreteDistribution pz = cand.query({"Z"}, Layer::L1, {{"X", x}, {"Y", y}});
                mix += pz.probability({z}) * px.probability({x});
              }
              worst = std::max(worst, std::fabs(mix - pzy.probability({z})));
            }
          }
          r.pass = worst <= ex.tol;
          r.detail = "max deviation " + format_number(worst);
          break;
        }
        case Expectation::Kind::IdentityFlag: {
          const Scm& m = b.models.at(ex.model_refs.at(0));
          bool flag = is_identity_embedding(b.embeddings.at(ex.embedding_refs.at(0)), m);
          r.pass = flag == ex.expected_bool;
          r.detail = flag ? "identity" : "not identity";
          break;
        }
      }
    } catch (const Error& err) {
      r.pass = false;
      r.detail = err.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

inline std::vector<FixtureBundle> all_fixture_bundles() {
  std::vector<FixtureBundle> out;
  out.push_back(counterexample_b3());
  out.push_back(nonuniqueness_c1());
  out.push_back(ecosystem_bundle());
  return out;
}

}  // namespace cemb
