#include "confsel/targets.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>

namespace confsel {

namespace {

std::vector<int> sorted_union(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool is_subset(const std::vector<int>& inner, const std::vector<int>& outer) {
  return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

void check_invariants(const TargetSubsets& r) {
  struct Pair {
    const std::vector<int>* inner;
    const std::vector<int>* outer;
    const char* what;
  };
  const Pair pairs[] = {
      {&r.qt, &r.xt, "qt within xt"},   {&r.zy, &r.xy, "zy within xy"},
      {&r.xt, &r.xty, "xt within xty"}, {&r.xy, &r.xty, "xy within xty"},
      {&r.wy, &r.xty, "wy within xty"},
  };
  for (const auto& p : pairs) {
    if (!is_subset(*p.inner, *p.outer)) {
      throw std::logic_error(std::string("selection invariant violated: ") + p.what);
    }
  }
}

// Neighborhood of `focal` in the DAG found by constraining a greedy score
// search to the tested skeleton over candidates + focal. The focal vertex is
// barred from being an edge source, so its neighborhood is its parent set.
std::vector<int> mmhc_neighborhood(const DiscreteDataset& view, int focal,
                                   const std::vector<int>& candidates, const TargetConfig& cfg) {
  if (candidates.empty()) return {};
  std::vector<int> vertices = candidates;
  vertices.push_back(focal);
  std::sort(vertices.begin(), vertices.end());
  vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());

  DiscreteDataset compact = select_columns(view, vertices);
  MiCiOracle oracle(compact, cfg.ci);
  std::vector<int> positions(vertices.size());
  for (std::size_t k = 0; k < positions.size(); ++k) positions[k] = static_cast<int>(k);
  Skeleton skel = mmpc_skeleton(oracle, positions, cfg.mmpc);

  const int focal_pos = static_cast<int>(
      std::lower_bound(vertices.begin(), vertices.end(), focal) - vertices.begin());
  HillClimbConfig hc = cfg.hill;
  hc.forbidden_children = {focal_pos};
  Dag g = hill_climb(compact, skel, hc);

  std::vector<int> local = g.parents(focal_pos);
  for (int pos = 0; pos < g.p; ++pos) {
    if (g.has_edge(focal_pos, pos)) local.push_back(pos);
  }
  std::sort(local.begin(), local.end());
  std::vector<int> out;
  out.reserve(local.size());
  for (int pos : local) out.push_back(vertices[pos]);
  return out;
}

std::vector<int> select_set(const DiscreteDataset& view, int focal,
                            const std::vector<int>& candidates, const TargetConfig& cfg) {
  if (candidates.empty()) return {};
  if (cfg.method == SelectionMethod::mmpc) {
    MiCiOracle oracle(view, cfg.ci);
    std::vector<int> out = mmpc_blanket(oracle, focal, candidates, cfg.mmpc);
    std::sort(out.begin(), out.end());
    return out;
  }
  return mmhc_neighborhood(view, focal, candidates, cfg);
}

}  // namespace

SelectionMethod selection_method_from_string(const std::string& s) {
  if (s == "mmpc") return SelectionMethod::mmpc;
  if (s == "mmhc") return SelectionMethod::mmhc;
  throw ConfigError("unknown selection method '" + s + "' (expected mmpc or mmhc)");
}

std::string to_string(SelectionMethod m) {
  return m == SelectionMethod::mmpc ? "mmpc" : "mmhc";
}

const std::array<const char*, 6> TargetSubsets::kSetKeys = {"xt", "qt", "xy",
                                                            "zy", "xty", "wy"};

const std::vector<int>& TargetSubsets::set(const std::string& key) const {
  if (key == "xt") return xt;
  if (key == "qt") return qt;
  if (key == "xy") return xy;
  if (key == "zy") return zy;
  if (key == "xty") return xty;
  if (key == "wy") return wy;
  throw std::invalid_argument("unknown target subset '" + key + "'");
}

std::vector<int> covariate_indices(const DiscreteDataset& data) {
  std::vector<int> out;
  for (int j = 0; j < static_cast<int>(data.columns.size()); ++j) {
    if (j == data.treatment || j == data.outcome) continue;
    if (!data.columns[j].name.empty() && data.columns[j].name[0] == '_') continue;
    out.push_back(j);
  }
  return out;
}

std::vector<int> covariate_indices(const RawDataset& data) {
  std::vector<int> out;
  for (int j = 0; j < static_cast<int>(data.columns.size()); ++j) {
    if (j == data.treatment || j == data.outcome) continue;
    if (!data.columns[j].name.empty() && data.columns[j].name[0] == '_') continue;
    out.push_back(j);
  }
  return out;
}

TargetSubsets estimate_targets(const DiscreteDataset& data, const TargetConfig& cfg) {
  if (data.treatment < 0 || data.outcome < 0) {
    throw ConfigError("subset selection needs tagged treatment and outcome columns");
  }
  const DiscreteColumn& tcol = data.columns[data.treatment];
  if (tcol.n_levels != 2) {
    throw ConfigError("treatment column '" + tcol.name + "' must be binary");
  }

  TargetSubsets r;
  const std::vector<int> covs = covariate_indices(data);

  std::array<std::vector<std::int64_t>, 2> arm_rows;
  for (std::int64_t i = 0; i < data.n; ++i) arm_rows[tcol.codes[i]].push_back(i);

  std::array<DiscreteDataset, 2> arm_view;
  std::array<bool, 2> arm_ok{};
  for (int t = 0; t < 2; ++t) {
    arm_ok[t] = static_cast<std::int64_t>(arm_rows[t].size()) >= cfg.min_arm_rows;
    if (arm_ok[t]) {
      arm_view[t] = filter_rows(data, arm_rows[t]);
    } else {
      r.warnings.push_back("arm " + tcol.name + "=" + std::to_string(t) + " has " +
                           std::to_string(arm_rows[t].size()) +
                           " rows; arm-specific sets left empty");
    }
  }

  r.xt = select_set(data, data.treatment, covs, cfg);

  for (int t = 0; t < 2; ++t) {
    if (!arm_ok[t]) continue;
    r.qt_by_arm[t] = select_set(arm_view[t], data.outcome, r.xt, cfg);
    r.xy_by_arm[t] = select_set(arm_view[t], data.outcome, covs, cfg);
  }
  r.qt = sorted_union(r.qt_by_arm[0], r.qt_by_arm[1]);
  r.xy = sorted_union(r.xy_by_arm[0], r.xy_by_arm[1]);

  // Instruments hiding in an arm's outcome neighborhood are screened against
  // the treatment on the full sample, where treatment variation exists.
  for (int t = 0; t < 2; ++t) {
    r.zy_by_arm[t] = select_set(data, data.treatment, r.xy_by_arm[t], cfg);
  }
  r.zy = sorted_union(r.zy_by_arm[0], r.zy_by_arm[1]);

  r.xty = sorted_union(r.xt, r.xy);

  for (int t = 0; t < 2; ++t) {
    if (!arm_ok[t]) continue;
    for (int v : r.xty) {
      if (!ci_test(arm_view[t], v, data.outcome, {}, cfg.ci).independent) {
        r.wy_by_arm[t].push_back(v);
      }
    }
  }
  r.wy = sorted_union(r.wy_by_arm[0], r.wy_by_arm[1]);

  check_invariants(r);
  return r;
}

TargetSubsets estimate_targets_oracle(const CiOracle& oracle, int treatment, int outcome,
                                      const std::vector<int>& covariates,
                                      const MmpcConfig& cfg) {
  TargetSubsets r;
  r.xt = mmpc_blanket(oracle, treatment, covariates, cfg);
  std::sort(r.xt.begin(), r.xt.end());
  r.qt = mmpc_blanket(oracle, outcome, r.xt, cfg);
  std::sort(r.qt.begin(), r.qt.end());
  r.xy = mmpc_blanket(oracle, outcome, covariates, cfg);
  std::sort(r.xy.begin(), r.xy.end());
  r.zy = mmpc_blanket(oracle, treatment, r.xy, cfg);
  std::sort(r.zy.begin(), r.zy.end());
  r.xty = sorted_union(r.xt, r.xy);
  for (int v : r.xty) {
    if (!oracle.independent(v, outcome, {})) r.wy.push_back(v);
  }
  check_invariants(r);
  return r;
}

TruthSets setting1_truth() {
  TruthSets t;
  t["xt"] = {"X1", "X2", "X3", "X4", "X7"};
  t["qt"] = {"X1", "X2", "X7"};
  t["xy"] = {"X1", "X2", "X5", "X6", "X8"};
  t["zy"] = {"X1", "X2", "X8"};
  t["xty"] = {"X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8"};
  t["wy"] = {"X1", "X2", "X5", "X6", "X7", "X8"};
  return t;
}

TruthSets setting2_truth() {
  TruthSets t = setting1_truth();
  t["qt"] = {"X1", "X2", "X4", "X7"};
  t["wy"] = {"X1", "X2", "X4", "X5", "X6", "X7", "X8"};
  return t;
}

}  // namespace confsel
