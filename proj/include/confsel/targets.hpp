#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "confsel/citest.hpp"
#include "confsel/dataset.hpp"
#include "confsel/structure.hpp"

namespace confsel {

enum class SelectionMethod { mmpc, mmhc };

SelectionMethod selection_method_from_string(const std::string& s);
std::string to_string(SelectionMethod m);

struct TargetConfig {
  SelectionMethod method = SelectionMethod::mmpc;
  // The pipeline default disables the ci-test sample-size guard: the guard
  // auto-accepts independence once the conditioning set grows, which silently
  // truncates neighbor discovery at the sample sizes this pipeline targets
  // (arm-level data loses half of n). Callers fitting tiny samples can turn
  // it back on.
  CiTestConfig ci{.alpha = 0.05, .size_guard = false};
  MmpcConfig mmpc;
  HillClimbConfig hill;  // forbidden_children is managed internally per view
  // Treatment arms smaller than this contribute nothing to the arm-specific
  // steps; a warning is recorded instead of running tests on a sliver.
  std::int64_t min_arm_rows = 10;
};

// The six covariate subsets the selection pipeline reports, as column indices
// into the dataset handed to estimate_targets (sorted ascending):
//   xt   neighbors of the treatment among all covariates (full sample)
//   qt   neighbors of the outcome within xt, per arm, unioned
//   xy   neighbors of the outcome among all covariates, per arm, unioned
//   zy   neighbors of the treatment within each arm's xy, on the full
//        sample, unioned
//   xty  xt union xy
//   wy   members of xty marginally associated with the outcome in at least
//        one arm
struct TargetSubsets {
  std::vector<int> xt, qt, xy, zy, xty, wy;

  // Per-arm audit trails for the unioned sets (index 0 = control arm).
  std::array<std::vector<int>, 2> qt_by_arm, xy_by_arm, zy_by_arm, wy_by_arm;

  std::vector<std::string> warnings;

  static const std::array<const char*, 6> kSetKeys;  // {"xt",...,"wy"}
  const std::vector<int>& set(const std::string& key) const;
};

// Runs the full pipeline on discretized data with tagged treatment/outcome
// columns. Covariates are every column except the roles and any column whose
// name starts with '_' (reserved for bookkeeping columns emitted by the
// simulator). Throws ConfigError when roles are missing or the treatment
// column is not binary.
TargetSubsets estimate_targets(const DiscreteDataset& data, const TargetConfig& cfg = {});

// Same pipeline against an abstract independence oracle (no sample, hence no
// arm splitting: every step queries the one oracle). Used to recover the
// population subsets implied by a known graph.
TargetSubsets estimate_targets_oracle(const CiOracle& oracle, int treatment, int outcome,
                                      const std::vector<int>& covariates,
                                      const MmpcConfig& cfg = {});

std::vector<int> covariate_indices(const DiscreteDataset& data);
std::vector<int> covariate_indices(const RawDataset& data);

// Population target subsets of the two benchmark generative graphs, keyed by
// set name, as covariate names. These are the reference sets the evaluation
// harness scores selections against.
using TruthSets = std::map<std::string, std::vector<std::string>>;
TruthSets setting1_truth();
TruthSets setting2_truth();

}  // namespace confsel
