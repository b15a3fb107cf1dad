#pragma once

#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cemb/construct.hpp"
#include "cemb/dataset.hpp"
#include "cemb/embed_error.hpp"
#include "cemb/embedding.hpp"
#include "cemb/fixtures.hpp"
#include "cemb/graph.hpp"
#include "cemb/io/embedding_format.hpp"
#include "cemb/io/graph_format.hpp"
#include "cemb/io/model_format.hpp"
#include "cemb/io/problem_format.hpp"
#include "cemb/io/report.hpp"
#include "cemb/marginal.hpp"
#include "cemb/merge.hpp"
#include "cemb/scm.hpp"

namespace cemb {
namespace cli {

// Exit codes: 0 success / positive verdict, 1 negative mathematical verdict
// (invalid embedding, failed certification), 2 usage or IO error.
inline constexpr int kOk = 0;
inline constexpr int kNegative = 1;
inline constexpr int kUsage = 2;

// Which library operations each subcommand drives; the unit suite checks
// every operation is reachable from exactly one subcommand.
inline const std::vector<std::pair<std::string, std::vector<std::string>>>& command_table() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> table = {
      {"validate", {"validate_structure"}},
      {"project",
       {"induced_graph", "mediated_adjacencies", "mediated_confounders", "latent_project"}},
      {"check-embedding", {"is_embedding", "is_cdag"}},
      {"embed-error",
       {"embedding_error", "query", "joint_distribution", "apply_intervention", "pushforward"}},
      {"certify",
       {"certify_solution", "reduce", "is_identity_embedding", "construct_consistent_high_level"}},
      {"gen-ecosystem", {"generate_ecosystem_datasets", "ecosystem_ground_truth", "sample"}},
      {"merge", {"merge", "transform_dataset", "concat_with_missing", "knn_impute"}},
      {"kl", {"empirical_distribution", "kl_divergence"}},
      {"fixtures", {"counterexample_b3", "nonuniqueness_c1"}},
  };
  return table;
}

namespace detail {

inline Layer parse_layer(const std::string& s) {
  if (s == "L1" || s == "l1") return Layer::L1;
  if (s == "L2" || s == "l2") return Layer::L2;
  fail(ErrorKind::InvalidArgument, "layer must be L1 or L2");
}

inline Distance parse_distance(const std::string& s) {
  if (s == "tv") return Distance::TV;
  if (s == "kl") return Distance::KL;
  fail(ErrorKind::InvalidArgument, "distance must be tv or kl");
}

inline void emit(const io::Report& rep, const std::string& out_path, std::ostream& out) {
  if (!out_path.empty()) rep.write(out_path);
  out << rep.str();
}

inline std::string dist_lines(const DiscreteDistribution& d) {
  std::string s;
  for (const auto& [a, p] : d.pmf())
    s += "  (" + join_values(a, ", ") + ") = " + format_number(p) + "\n";
  return s;
}

struct EmbeddingContext {
  Scm low;
  Scm high;
  Embedding embedding;
};

inline EmbeddingContext load_embedding_context(const std::string& low_path,
                                               const std::string& high_path,
                                               const std::string& emb_path) {
  return {io::read_model(low_path), io::read_model(high_path), io::read_embedding(emb_path)};
}

}  // namespace detail

inline int cmd_validate(const std::string& model_path, const std::string& low_path,
                        const std::string& high_path, const std::string& emb_path,
                        const std::string& out_path, std::ostream& out) {
  io::Report rep("validate");
  if (!emb_path.empty()) {
    auto ctx = detail::load_embedding_context(low_path, high_path, emb_path);
    auto violations = validate_structure(ctx.embedding, ctx.low, ctx.high);
    rep.kv("subject", "embedding " + ctx.embedding.name);
    rep.kv("low_model", ctx.low.name());
    rep.kv("high_model", ctx.high.name());
    rep.kv("ok", violations.empty());
    rep.kv("violations", violations.size());
    for (const auto& v : violations) rep.line("violation: " + v.where + ": " + v.detail);
    detail::emit(rep, out_path, out);
    return violations.empty() ? kOk : kNegative;
  }
  Scm m = io::read_model(model_path);  // parse_model validates structure
  rep.kv("subject", "model " + m.name());
  rep.kv("variables", m.variables().size());
  rep.kv("exogenous", m.exogenous().size());
  rep.kv("acyclic", true);
  rep.kv("engine", m.all_exogenous_tabular() && m.all_ranges_finite() ? "exact" : "sampling");
  rep.kv("integer_outputs", m.integer_outputs());
  rep.kv("interventions", m.interventions().size());
  rep.kv("ok", true);
  detail::emit(rep, out_path, out);
  return kOk;
}

inline int cmd_project(const std::string& model_path, const std::string& graph_path,
                       const std::vector<std::string>& relevant, const std::string& out_path,
                       const std::string& write_graph_path, std::ostream& out) {
  CausalGraph g = !model_path.empty() ? io::read_model(model_path).induced_graph()
                                      : io::read_graph(graph_path);
  std::set<VariableId> r(relevant.begin(), relevant.end());
  if (r.empty())
    for (const auto& v : g.vertices()) r.insert(v);
  auto adj = mediated_adjacencies(g, r);
  auto conf = mediated_confounders(g, r);
  CausalGraph proj = latent_project(g, r);

  io::Report rep("project");
  rep.kv("relevant", join(r, ",", [](const VariableId& v) { return v; }));
  rep.section("mediated_adjacencies");
  for (const auto& [a, b] : adj) rep.line(a + " ~> " + b);
  rep.section("mediated_confounders");
  for (const auto& [a, b] : conf) rep.line(a + " <~> " + b);
  rep.section("projection");
  rep.line(io::serialize_graph(proj, "projection"));
  detail::emit(rep, out_path, out);
  if (!write_graph_path.empty()) io::write_graph(proj, write_graph_path, "projection");
  return kOk;
}

inline int cmd_check_embedding(const std::string& low_path, const std::string& high_path,
                               const std::string& emb_path, const std::string& method,
                               const std::string& out_path, std::ostream& out) {
  auto ctx = detail::load_embedding_context(low_path, high_path, emb_path);
  io::Report rep("check-embedding");
  rep.kv("embedding", ctx.embedding.name);
  bool ok = true;
  if (method == "projection" || method == "both") {
    auto v = is_embedding(ctx.embedding, ctx.low, ctx.high, EmbeddingMethod::Projection);
    rep.kv("projection_verdict", v.ok);
    for (const auto& s : v.violations) rep.line("projection: " + s);
    ok = ok && v.ok;
  }
  if (method == "mediated" || method == "both") {
    auto v = is_embedding(ctx.embedding, ctx.low, ctx.high, EmbeddingMethod::Mediated);
    rep.kv("mediated_verdict", v.ok);
    for (const auto& s : v.violations) rep.line("mediated: " + s);
    ok = ok && v.ok;
  }
  rep.kv("verdict", ok);
  detail::emit(rep, out_path, out);
  return ok ? kOk : kNegative;
}

inline int cmd_embed_error(const std::string& low_path, const std::string& high_path,
                           const std::string& emb_path, const std::string& layer_s,
                           const std::string& distance_s, bool full_table,
                           const std::string& out_path, std::ostream& out) {
  auto ctx = detail::load_embedding_context(low_path, high_path, emb_path);
  Layer layer = detail::parse_layer(layer_s);
  Distance distance = detail::parse_distance(distance_s);
  ErrorReport er = embedding_error(ctx.embedding, ctx.low, ctx.high, layer, distance);
  auto vp = is_embedding(ctx.embedding, ctx.low, ctx.high, EmbeddingMethod::Projection);

  io::Report rep("embed-error");
  rep.kv("embedding", ctx.embedding.name);
  rep.kv("layer", layer_name(layer));
  rep.kv("distance", distance_name(distance));
  rep.kv("error", er.error);
  rep.kv("consistent", er.consistent());
  rep.kv("embedding_verdict", vp.ok);
  rep.kv("queries", er.per_query.size());
  rep.kv("skipped", er.skipped);
  if (er.infinite) rep.kv("infinite_divergence", true);
  rep.kv("witness", er.witness.describe());
  if (full_table) {
    rep.section("queries");
    for (const auto& q : er.per_query) rep.line(q.describe());
  }
  detail::emit(rep, out_path, out);
  return (vp.ok && er.consistent()) ? kOk : kNegative;
}

inline int cmd_certify(const std::string& problem_path, const std::string& layer_s,
                       int construct_from, const std::string& high_graph_path,
                       const std::string& write_candidate, bool with_summaries,
                       const std::string& out_path, std::ostream& out) {
  MarginalProblem p = io::read_problem(problem_path);
  Layer layer = detail::parse_layer(layer_s);
  io::Report rep("certify");
  if (construct_from >= 0) {
    if (static_cast<std::size_t>(construct_from) >= p.embeddings.size())
      fail(ErrorKind::InvalidArgument, "--construct-from index out of range");
    CausalGraph hg = io::read_graph(high_graph_path);
    const Embedding& e = p.embeddings[static_cast<std::size_t>(construct_from)];
    Scm candidate =
        construct_consistent_high_level(p.models[static_cast<std::size_t>(construct_from)],
                                        e.phi, hg);
    rep.kv("constructed_candidate", candidate.name());
    if (!write_candidate.empty()) io::write_model(candidate, write_candidate);
    p.candidate = std::move(candidate);
  }
  CertifyResult res = certify_solution(p, layer);
  rep.kv("layer", layer_name(layer));
  rep.kv("models", p.models.size());
  rep.kv("certified", res.certified);
  for (std::size_t i = 0; i < res.errors.size(); ++i) {
    rep.kv("error_" + std::to_string(i), res.errors[i]);
    rep.kv("identity_" + std::to_string(i), res.identity_flags[i]);
  }
  rep.section("violations");
  for (const auto& v : res.violations) rep.line(v);
  for (const auto& n : res.overlap_notes) rep.line(n);
  if (with_summaries) {
    rep.section("reduced_summaries");
    for (const auto& s : reduce(p)) {
      rep.line("model " + std::to_string(s.model_index) + " (" + s.model_name + ") over {" +
               join_strings(s.variables, ", ") + "}, " + std::to_string(s.queries.size()) +
               " queries");
    }
  }
  detail::emit(rep, out_path, out);
  return res.certified ? kOk : kNegative;
}

inline int cmd_gen_ecosystem(std::uint64_t seed, const std::string& outdir, bool x1_prose,
                             const std::string& out_path, std::ostream& out) {
  EcosystemDatasets ds = generate_ecosystem_datasets(seed, x1_prose);
  write_dataset_csv(ds.x1, outdir + "/x1.csv");
  write_dataset_csv(ds.x2, outdir + "/x2.csv");
  write_dataset_csv(ds.eval, outdir + "/eval.csv");
  io::Report rep("gen-ecosystem");
  rep.kv("seed", std::to_string(seed));
  rep.kv("x1_columns", join_strings(ds.x1.columns, ","));
  rep.kv("x1_rows", ds.x1.rows.size());
  rep.kv("x2_columns", join_strings(ds.x2.columns, ","));
  rep.kv("x2_rows", ds.x2.rows.size());
  rep.kv("eval_columns", join_strings(ds.eval.columns, ","));
  rep.kv("eval_rows", ds.eval.rows.size());
  detail::emit(rep, out_path, out);
  return kOk;
}

inline int cmd_merge(const std::vector<std::string>& data_paths,
                     const std::vector<std::string>& emb_paths,
                     const std::vector<std::string>& schema, std::size_t k,
                     const std::string& out_data, const std::string& write_parts_dir,
                     const std::string& out_path, std::ostream& out) {
  if (data_paths.size() != emb_paths.size())
    fail(ErrorKind::InvalidArgument, "--data and --embedding must be paired");
  if (data_paths.empty()) fail(ErrorKind::InvalidArgument, "at least one --data is required");
  MergePlan plan;
  plan.target_schema = schema;
  plan.imputer.k = k;
  for (std::size_t i = 0; i < data_paths.size(); ++i)
    plan.inputs.emplace_back(read_dataset_csv(data_paths[i]), io::read_embedding(emb_paths[i]));

  io::Report rep("merge");
  rep.kv("schema", join_strings(schema, ","));
  rep.kv("k", k);
  std::vector<Dataset> parts;
  for (std::size_t i = 0; i < plan.inputs.size(); ++i) {
    Dataset t = transform_dataset(plan.inputs[i].first, plan.inputs[i].second);
    rep.kv("part_" + std::to_string(i) + "_rows", t.rows.size());
    rep.kv("part_" + std::to_string(i) + "_columns", join_strings(t.columns, ","));
    if (!write_parts_dir.empty())
      write_dataset_csv(t, write_parts_dir + "/part" + std::to_string(i) + ".csv");
    parts.push_back(std::move(t));
  }
  Dataset stacked = concat_with_missing(parts, plan.target_schema);
  rep.kv("stacked_rows", stacked.rows.size());
  rep.kv("stacked_missing_cells", stacked.missing_count());
  Dataset merged = knn_impute(stacked, plan.imputer);
  rep.kv("merged_missing_cells", merged.missing_count());
  if (!out_data.empty()) write_dataset_csv(merged, out_data);
  detail::emit(rep, out_path, out);
  return kOk;
}

inline int cmd_kl(const std::string& ref_path, const std::vector<std::string>& data_paths,
                  const std::vector<std::string>& vars, double bin_width, double bin_origin,
                  const std::string& out_path, std::ostream& out) {
  BinSpec bins;
  bins.width = bin_width;
  bins.origin = bin_origin;
  Dataset ref = read_dataset_csv(ref_path);
  DiscreteDistribution p = empirical_distribution(ref, vars, bins);
  io::Report rep("kl");
  rep.kv("vars", join_strings(vars, ","));
  rep.kv("bin_width", bin_width);
  rep.kv("bin_origin", bin_origin);
  rep.kv("reference", ref_path);
  rep.kv("reference_rows", ref.rows.size());
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < data_paths.size(); ++i) {
    Dataset d = read_dataset_csv(data_paths[i]);
    DiscreteDistribution q = empirical_distribution(d, vars, bins);
    double v = kl_divergence(p, q);
    rep.kv("kl_" + std::to_string(i), v);
    rep.kv("rows_" + std::to_string(i), d.rows.size());
    if (v < best) {
      best = v;
      best_i = i;
    }
  }
  rep.kv("lowest", std::to_string(best_i));
  detail::emit(rep, out_path, out);
  return kOk;
}

inline int cmd_fixtures(const std::string& outdir, const std::string& out_path,
                        std::ostream& out) {
  io::Report rep("fixtures");
  bool all_pass = true;
  for (const FixtureBundle& b : all_fixture_bundles()) {
    rep.section(b.name);
    for (const auto& [name, m] : b.models)
      io::write_model(m, outdir + "/" + b.name + "_" + name + ".scm");
    for (const auto& [name, e] : b.embeddings)
      io::write_embedding(e, outdir + "/" + b.name + "_" + name + ".emb");
    for (const auto& [name, g] : b.graphs)
      io::write_graph(g, outdir + "/" + b.name + "_" + name + ".graph", name);
    for (const auto& r : replay(b)) {
      rep.line(std::string(r.pass ? "pass" : "FAIL") + ": " + r.description +
               (r.detail.empty() ? "" : " (" + r.detail + ")"));
      all_pass = all_pass && r.pass;
    }
  }
  io::write_graph(diagram_low_graph(), outdir + "/diagram_low.graph", "diagram_low");
  io::write_graph(diagram_high_graph(), outdir + "/diagram_high.graph", "diagram_high");
  rep.kv("all_expectations_pass", all_pass);
  detail::emit(rep, out_path, out);
  return all_pass ? kOk : kNegative;
}

inline int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"causal embeddings of structural causal models"};
  app.require_subcommand(1);

  std::string model_path, low_path, high_path, emb_path, graph_path, out_path;
  std::string layer = "L2", distance = "tv", method = "both";
  std::vector<std::string> relevant, schema, vars, data_paths, emb_paths;
  std::string outdir = ".", out_data, write_parts, write_graph_path, write_candidate,
              problem_path, ref_path;
  std::uint64_t seed = 0;
  std::size_t k = 2;
  double bin_width = 8.0, bin_origin = 0.0;
  bool x1_prose = false, full_table = false, with_summaries = false;
  int construct_from = -1;

  auto* validate = app.add_subcommand("validate", "validate a model or an embedding");
  validate->add_option("--model", model_path);
  validate->add_option("--low", low_path);
  validate->add_option("--high", high_path);
  validate->add_option("--embedding", emb_path);
  validate->add_option("--out", out_path);

  auto* project = app.add_subcommand("project", "latent projection onto a relevant set");
  project->add_option("--model", model_path);
  project->add_option("--graph", graph_path);
  project->add_option("--relevant", relevant)->delimiter(',');
  project->add_option("--write-graph", write_graph_path);
  project->add_option("--out", out_path);

  auto* check = app.add_subcommand("check-embedding", "embedding verdict for a map");
  check->add_option("--low", low_path)->required();
  check->add_option("--high", high_path)->required();
  check->add_option("--embedding", emb_path)->required();
  check->add_option("--method", method)->check(CLI::IsMember({"projection", "mediated", "both"}));
  check->add_option("--out", out_path);

  auto* ee = app.add_subcommand("embed-error", "consistency error of an embedding");
  ee->add_option("--low", low_path)->required();
  ee->add_option("--high", high_path)->required();
  ee->add_option("--embedding", emb_path)->required();
  ee->add_option("--layer", layer);
  ee->add_option("--distance", distance);
  ee->add_flag("--full", full_table, "list every evaluated query");
  ee->add_option("--out", out_path);

  auto* certify = app.add_subcommand("certify", "certify a candidate joint model");
  certify->add_option("--problem", problem_path)->required();
  certify->add_option("--layer", layer);
  certify->add_option("--construct-from", construct_from,
                      "build the candidate from this embedding index");
  certify->add_option("--high-graph", graph_path);
  certify->add_option("--write-candidate", write_candidate);
  certify->add_flag("--summaries", with_summaries, "include reduced marginal summaries");
  certify->add_option("--out", out_path);

  auto* gen = app.add_subcommand("gen-ecosystem", "generate the simulated wildlife datasets");
  gen->add_option("--seed", seed);
  gen->add_option("--outdir", outdir);
  gen->add_flag("--x1-prose", x1_prose,
                "use the alternative first-dataset column set (drop Humans and Berries)");
  gen->add_option("--out", out_path);

  auto* mg = app.add_subcommand("merge", "transform, stack and impute datasets");
  mg->add_option("--data", data_paths)->required();
  mg->add_option("--embedding", emb_paths)->required();
  mg->add_option("--schema", schema)->delimiter(',')->required();
  mg->add_option("--k", k);
  mg->add_option("--out-data", out_data);
  mg->add_option("--write-parts", write_parts);
  mg->add_option("--out", out_path);

  auto* kl = app.add_subcommand("kl", "KL divergence of binned estimates against a reference");
  kl->add_option("--ref", ref_path)->required();
  kl->add_option("--data", data_paths)->required();
  kl->add_option("--vars", vars)->delimiter(',')->required();
  kl->add_option("--bins", bin_width);
  kl->add_option("--bins-origin", bin_origin);
  kl->add_option("--out", out_path);

  auto* fx = app.add_subcommand("fixtures", "export fixture models, embeddings and verdicts");
  fx->add_option("--outdir", outdir);
  fx->add_option("--out", out_path);

  try {
    std::vector<std::string> args(argv.rbegin(), argv.rend());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (validate->parsed())
      return cmd_validate(model_path, low_path, high_path, emb_path, out_path, out);
    if (project->parsed())
      return cmd_project(model_path, graph_path, relevant, out_path, write_graph_path, out);
    if (check->parsed())
      return cmd_check_embedding(low_path, high_path, emb_path, method, out_path, out);
    if (ee->parsed())
      return cmd_embed_error(low_path, high_path, emb_path, layer, distance, full_table, out_path,
                             out);
    if (certify->parsed())
      return cmd_certify(problem_path, layer, construct_from, graph_path, write_candidate,
                         with_summaries, out_path, out);
    if (gen->parsed()) return cmd_gen_ecosystem(seed, outdir, x1_prose, out_path, out);
    if (mg->parsed())
      return cmd_merge(data_paths, emb_paths, schema, k, out_data, write_parts, out_path, out);
    if (kl->parsed())
      return cmd_kl(ref_path, data_paths, vars, bin_width, bin_origin, out_path, out);
    if (fx->parsed()) return cmd_fixtures(outdir, out_path, out);
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::InvalidModel:
      case ErrorKind::CyclicModel:
      case ErrorKind::StructureInvalid:
      case ErrorKind::NotGraphicallyConsistent:
        err << "verdict: " << e.what() << "\n";
        return kNegative;
      default:
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  err << "error: no subcommand\n";
  return kUsage;
}

}  // namespace cli
}  // namespace cemb
