#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "confsel/dgp.hpp"
#include "confsel/estimators.hpp"
#include "confsel/targets.hpp"

namespace confsel {

// The covariate sets the replication engine evaluates: the full covariate
// vector plus the six selected subsets.
inline constexpr std::array<const char*, 7> kAllSetKeys = {"X",  "xt",  "qt", "xy",
                                                           "zy", "xty", "wy"};

struct GridSpec {
  int setting = 1;
  OutcomeKind outcome = OutcomeKind::linear;
  std::vector<std::int64_t> ns = {2000};
  std::vector<SelectionMethod> methods = {SelectionMethod::mmpc};
  int replications = 200;
  std::uint64_t seed = 1;
  int workers = 0;  // 0 = all logical cores
  int bins = 3;
  int p_total = 100;
  double alpha = 0.05;
  int max_cond_size = 3;
  // Off by default: see the note on TargetConfig::ci. The guard starves
  // neighbor discovery on arm-level data at the grid's sample sizes.
  bool size_guard = false;
  bool with_estimation = true;
  // Keys from kAllSetKeys to run the estimators on; empty = every key.
  std::vector<std::string> estimation_sets;
  double caliper = 0.0;
  std::int64_t true_ace_draws = 10'000'000;
};

struct EstimatorOutcome {
  bool attempted = false;
  bool failed = false;
  std::string error;
  AceEstimate estimate;
};

struct SetRecord {
  std::string key;
  std::vector<std::string> selected;  // covariate names
  SuccessFlags flags;
  EstimatorOutcome psm, tmle;
};

struct ReplicationRecord {
  std::int64_t n = 0;
  std::string method;
  int replication = 0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
  std::vector<SetRecord> sets;  // one per kAllSetKeys entry, in order
};

struct EstimatorMetrics {
  int used = 0;      // replications that produced an estimate
  int failures = 0;  // replications where the estimator threw
  double bias = 0.0;
  double sd = 0.0;   // population denominator over used replications
  double mse = 0.0;  // mean squared error about the true effect
  double cp = 0.0;   // coverage of the 95% interval, percent
  double ciw = 0.0;  // mean interval width
  double cil = 0.0;  // mean lower bound
  double ciu = 0.0;  // mean upper bound
};

struct MetricsRow {
  std::int64_t n = 0;
  std::string method;
  std::string set;
  double unconf_pct = 0.0;
  double superset_pct = 0.0;
  double equal_pct = 0.0;
  double card_median = 0.0;
  EstimatorMetrics psm, tmle;
};

struct MetricsTable {
  int setting = 1;
  OutcomeKind outcome = OutcomeKind::linear;
  int replications = 0;
  double true_beta = 0.0;
  std::vector<MetricsRow> rows;
};

struct GridResult {
  MetricsTable metrics;
  std::vector<ReplicationRecord> records;  // ordered by (n, method, replication)
};

// Runs replications over the (n, method) grid: simulate, discretize, select,
// score against the population truth, and (optionally) estimate the effect
// with both estimators on each evaluated set. Replications run on a worker
// pool but land in preassigned slots, so results do not depend on the worker
// count. Estimator failures are recorded and excluded from the aggregates.
GridResult run_grid(const GridSpec& spec);

// Deterministic fold of records (in stored order) into the metrics table;
// run_grid uses exactly this, so persisting records and re-aggregating them
// reproduces the table bit for bit.
MetricsTable aggregate(const GridSpec& spec, const std::vector<ReplicationRecord>& records,
                       double true_beta);

using Provenance = std::vector<std::pair<std::string, std::string>>;

void write_metrics_csv(const MetricsTable& table, const std::string& path,
                       const Provenance& provenance);
void write_raw_csv(const std::vector<ReplicationRecord>& records, const std::string& path,
                   const Provenance& provenance);
// Reads back what write_raw_csv wrote; header comments land in `header` when
// provided (later duplicate keys win).
std::vector<ReplicationRecord> read_raw_csv(const std::string& path,
                                            std::map<std::string, std::string>* header = nullptr);
void write_summary_md(const MetricsTable& table, const std::string& path,
                      const Provenance& provenance);

}  // namespace confsel
