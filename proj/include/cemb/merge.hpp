#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cemb/common.hpp"
#include "cemb/dataset.hpp"
#include "cemb/distribution.hpp"
#include "cemb/embedding.hpp"
#include "cemb/parallel.hpp"

namespace cemb {

struct KnnConfig {
  std::size_t k = 2;
};

struct MergePlan {
  std::vector<std::pair<Dataset, Embedding>> inputs;
  std::vector<VariableId> target_schema;
  KnnConfig imputer;
};

// Applies the embedding's range maps row-wise: output columns are the
// relevant high variables; a row with a missing preimage cell yields a
// missing image cell.
inline Dataset transform_dataset(const Dataset& d, const Embedding& e) {
  std::vector<std::vector<std::size_t>> positions;
  positions.reserve(e.relevant_high.size());
  for (const auto& hv : e.relevant_high) {
    const RangeMap& a = e.alphas.at(hv);
    std::vector<std::size_t> pos;
    for (const auto& lv : a.preimage) {
      if (!d.has_column(lv))
        fail(ErrorKind::SchemaMismatch,
             "dataset lacks column '" + lv + "' needed by range map for " + hv);
      pos.push_back(d.column_index(lv));
    }
    positions.push_back(std::move(pos));
  }
  Dataset out;
  out.columns = e.relevant_high;
  out.rows.assign(d.rows.size(), Dataset::Row(out.columns.size()));
  out.provenance = d.provenance;
  parallel_for(d.rows.size(), [&](std::size_t r) {
    for (std::size_t c = 0; c < e.relevant_high.size(); ++c) {
      const RangeMap& a = e.alphas.at(e.relevant_high[c]);
      std::vector<double> cells;
      cells.reserve(positions[c].size());
      bool missing = false;
      for (std::size_t pos : positions[c]) {
        const auto& cell = d.rows[r][pos];
        if (!cell.has_value()) {
          missing = true;
          break;
        }
        cells.push_back(*cell);
      }
      out.rows[r][c] = missing ? Dataset::Cell{} : Dataset::Cell{a.apply_cells(cells)};
    }
  });
  return out;
}

// Stacks parts over a shared schema; columns a part lacks are filled with
// missing cells and each row remembers which part it came from.
inline Dataset concat_with_missing(const std::vector<Dataset>& parts,
                                   const std::vector<VariableId>& schema) {
  Dataset out;
  out.columns = schema;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Dataset& part = parts[p];
    std::vector<std::optional<std::size_t>> src(schema.size());
    for (std::size_t c = 0; c < schema.size(); ++c)
      if (part.has_column(schema[c])) src[c] = part.column_index(schema[c]);
    for (const auto& col : part.columns) {
      if (std::find(schema.begin(), schema.end(), col) == schema.end())
        fail(ErrorKind::UnknownColumn, "part column '" + col + "' not in the target schema");
    }
    for (const auto& row : part.rows) {
      Dataset::Row r(schema.size());
      for (std::size_t c = 0; c < schema.size(); ++c)
        if (src[c]) r[c] = row[*src[c]];
      out.rows.push_back(std::move(r));
      out.provenance.push_back(static_cast<int>(p));
    }
  }
  return out;
}

// K-nearest-neighbour imputation. Coordinates are min-max normalized over
// each column's observed cells; distances are Euclidean over mutually
// observed coordinates; each missing cell becomes the mean of the k nearest
// donor rows observed in that column. Ties break on the lowest row index,
// making the result deterministic. Observed cells are never altered.
inline Dataset knn_impute(const Dataset& d, const KnnConfig& cfg) {
  d.check_rectangular();
  if (cfg.k < 1) fail(ErrorKind::InvalidArgument, "k must be at least 1");
  const std::size_t ncols = d.columns.size();
  const std::size_t nrows = d.rows.size();

  for (std::size_t c = 0; c < ncols; ++c) {
    bool any = false;
    for (std::size_t r = 0; r < nrows && !any; ++r) any = d.rows[r][c].has_value();
    if (!any) fail(ErrorKind::AllMissingColumn, "column '" + d.columns[c] + "' has no observed cell");
  }
  for (std::size_t r = 0; r < nrows; ++r) {
    bool any = false;
    for (std::size_t c = 0; c < ncols && !any; ++c) any = d.rows[r][c].has_value();
    if (!any) fail(ErrorKind::AllMissingRow, "row " + std::to_string(r) + " has no observed cell");
  }

  std::vector<double> lo(ncols, std::numeric_limits<double>::infinity());
  std::vector<double> hi(ncols, -std::numeric_limits<double>::infinity());
  for (const auto& row : d.rows)
    for (std::size_t c = 0; c < ncols; ++c)
      if (row[c]) {
        lo[c] = std::min(lo[c], *row[c]);
        hi[c] = std::max(hi[c], *row[c]);
      }
  auto normalized = [&](std::size_t r, std::size_t c) -> std::optional<double> {
    const auto& cell = d.rows[r][c];
    if (!cell) return std::nullopt;
    if (hi[c] == lo[c]) return 0.0;
    return (*cell - lo[c]) / (hi[c] - lo[c]);
  };
  std::vector<std::vector<std::optional<double>>> norm(nrows);
  for (std::size_t r = 0; r < nrows; ++r) {
    norm[r].resize(ncols);
    for (std::size_t c = 0; c < ncols; ++c) norm[r][c] = normalized(r, c);
  }

  std::vector<std::size_t> donors_per_col(ncols, 0);
  for (std::size_t c = 0; c < ncols; ++c)
    for (std::size_t r = 0; r < nrows; ++r)
      if (d.rows[r][c]) ++donors_per_col[c];

  Dataset out = d;
  std::vector<bool> col_has_missing(ncols, false);
  for (std::size_t r = 0; r < nrows; ++r)
    for (std::size_t c = 0; c < ncols; ++c)
      if (!d.rows[r][c]) col_has_missing[c] = true;
  for (std::size_t c = 0; c < ncols; ++c)
    if (col_has_missing[c] && cfg.k > donors_per_col[c])
      fail(ErrorKind::InvalidArgument,
           "k=" + std::to_string(cfg.k) + " exceeds the " + std::to_string(donors_per_col[c]) +
               " donor rows of column '" + d.columns[c] + "'");
  std::vector<std::size_t> targets;
  for (std::size_t r = 0; r < nrows; ++r)
    for (std::size_t c = 0; c < ncols; ++c)
      if (!d.rows[r][c]) {
        targets.push_back(r);
        break;
      }

  parallel_for(targets.size(), [&](std::size_t ti) {
    std::size_t r = targets[ti];
    std::vector<double> dist(nrows, std::numeric_limits<double>::infinity());
    for (std::size_t s = 0; s < nrows; ++s) {
      if (s == r) continue;
      double acc = 0.0;
      bool shared = false;
      for (std::size_t c = 0; c < ncols; ++c) {
        if (norm[r][c] && norm[s][c]) {
          double diff = *norm[r][c] - *norm[s][c];
          acc += diff * diff;
          shared = true;
        }
      }
      if (shared) dist[s] = std::sqrt(acc);
    }
    for (std::size_t c = 0; c < ncols; ++c) {
      if (d.rows[r][c]) continue;
      std::vector<std::size_t> donors;
      donors.reserve(donors_per_col[c]);
      for (std::size_t s = 0; s < nrows; ++s)
        if (s != r && d.rows[s][c]) donors.push_back(s);
      std::partial_sort(donors.begin(), donors.begin() + static_cast<std::ptrdiff_t>(cfg.k),
                        donors.end(), [&](std::size_t a, std::size_t b) {
                          if (dist[a] != dist[b]) return dist[a] < dist[b];
                          return a < b;
                        });
      double sum = 0.0;
      for (std::size_t j = 0; j < cfg.k; ++j) sum += *d.rows[donors[j]][c];
      out.rows[r][c] = sum / static_cast<double>(cfg.k);
    }
  });
  return out;
}

// Full pipeline: transform each dataset through its embedding, stack over
// the target schema, impute.
inline Dataset merge(const MergePlan& plan) {
  std::vector<Dataset> parts;
  parts.reserve(plan.inputs.size());
  for (const auto& [d, e] : plan.inputs) {
    for (const auto& hv : e.relevant_high)
      if (std::find(plan.target_schema.begin(), plan.target_schema.end(), hv) ==
          plan.target_schema.end())
        fail(ErrorKind::UnknownColumn,
             "embedding output '" + hv + "' is not part of the target schema");
    parts.push_back(transform_dataset(d, e));
  }
  Dataset stacked = concat_with_missing(parts, plan.target_schema);
  return knn_impute(stacked, plan.imputer);
}

// Fixed-width histogram binning: cell index floor((v - origin) / width).
struct BinSpec {
  double width = 8.0;
  double origin = 0.0;
  std::map<VariableId, std::pair<double, double>> overrides;  // var -> (width, origin)

  std::pair<double, double> for_variable(const VariableId& v) const {
    auto it = overrides.find(v);
    if (it != overrides.end()) return it->second;
    return {width, origin};
  }
};

inline DiscreteDistribution empirical_distribution(const Dataset& d,
                                                   const std::vector<VariableId>& vars,
                                                   const BinSpec& bins) {
  if (d.rows.empty()) fail(ErrorKind::InvalidArgument, "empty dataset");
  std::vector<std::size_t> idx;
  std::vector<std::pair<double, double>> wo;
  for (const auto& v : vars) {
    idx.push_back(d.column_index(v));
    auto [w, o] = bins.for_variable(v);
    if (w <= 0) fail(ErrorKind::InvalidArgument, "bin width must be positive");
    wo.emplace_back(w, o);
  }
  DiscreteDistribution out(vars);
  const double w = 1.0 / static_cast<double>(d.rows.size());
  for (std::size_t r = 0; r < d.rows.size(); ++r) {
    DiscreteDistribution::Assignment a;
    a.reserve(vars.size());
    for (std::size_t c = 0; c < vars.size(); ++c) {
      const auto& cell = d.rows[r][idx[c]];
      if (!cell)
        fail(ErrorKind::MissingCells,
             "missing cell in column '" + vars[c] + "' at row " + std::to_string(r));
      a.push_back(static_cast<Value>(std::floor((*cell - wo[c].second) / wo[c].first)));
    }
    out.add_mass(a, w);
  }
  return out;
}

}  // namespace cemb
