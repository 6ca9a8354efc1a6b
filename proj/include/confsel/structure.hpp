#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "confsel/citest.hpp"
#include "confsel/graphs.hpp"

namespace confsel {

struct MmpcConfig {
  int max_cond_size = 3;  // phase-2 subset cap; negative = unbounded
};

// Candidate-neighbor set of `target` from the two filtering phases:
//   phase 1 scans candidates in ascending order and admits any variable
//   dependent with the target given the current set;
//   phase 2 removes a member when some subset of the remaining members
//   (enumerated by increasing cardinality) renders it independent.
std::vector<int> mmpc_neighbors(const CiOracle& oracle, int target,
                                const std::vector<int>& candidates, const MmpcConfig& cfg);

// Phases 1-2 plus the symmetry correction restricted to one focal vertex:
// a neighbor survives only if the focal vertex also appears in the
// neighbor's own candidate set.
std::vector<int> mmpc_blanket(const CiOracle& oracle, int focal,
                              const std::vector<int>& candidates, const MmpcConfig& cfg);

// Full undirected skeleton over `vertices`: mmpc_neighbors per vertex, then
// an edge survives only when both endpoints select each other. The result is
// indexed by position in `vertices`.
Skeleton mmpc_skeleton(const CiOracle& oracle, const std::vector<int>& vertices,
                       const MmpcConfig& cfg);

enum class ScoreKind { loglik, aic, bic };

// Decomposable local score of column v given a parent set: multinomial
// log-likelihood with penalty 0 (loglik), k (aic) or (k/2) ln n (bic), where
// k = (levels_v - 1) * prod(levels_parents). Parent configurations that never
// occur contribute nothing.
double local_score(const DiscreteDataset& data, int v, const std::vector<int>& parents,
                   ScoreKind kind);

// Memo of local scores keyed by (vertex, sorted parent set).
class ScoreCache {
 public:
  double get_or_compute(int v, const std::vector<int>& sorted_parents,
                        const std::function<double()>& compute);
  std::size_t size() const { return memo_.size(); }

 private:
  std::unordered_map<std::string, double> memo_;
};

struct HillClimbConfig {
  ScoreKind score = ScoreKind::aic;
  int max_iter = 10000;
  // Vertices that may never be edge sources. An edge between two forbidden
  // vertices is excluded in both directions.
  std::vector<int> forbidden_children;
};

// Greedy search over single-edge additions, deletions and reversals starting
// from the empty graph. Additions are restricted to skeleton edges; no move
// may create a cycle. Equal-gain moves break deterministically by kind
// (deletion, reversal, addition) then by (source, destination).
Dag hill_climb(const DiscreteDataset& data, const Skeleton& skeleton,
               const HillClimbConfig& cfg);

}  // namespace confsel
