#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace confsel {

// Typed errors so the CLI can map failure classes to exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ColumnKind { continuous, factor };

struct RawColumn {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  std::vector<double> values;  // factor codes stored exactly as small ints
};

// Mixed continuous/factor table. `treatment` and `outcome` are column indices
// (-1 when untagged). Estimators consume this type directly; structure
// learning consumes the discretized counterpart.
struct RawDataset {
  std::int64_t n = 0;
  std::vector<RawColumn> columns;
  int treatment = -1;
  int outcome = -1;

  int col_index(const std::string& name) const;  // -1 when absent
  const RawColumn& col(const std::string& name) const;
};

struct DiscreteColumn {
  std::string name;
  std::vector<std::uint8_t> codes;  // each in [0, n_levels)
  int n_levels = 1;
  bool constant = false;   // fewer than two distinct observed values
  bool collapsed = false;  // fewer levels realized than requested bins
};

struct DiscreteDataset {
  std::int64_t n = 0;
  std::vector<DiscreteColumn> columns;
  int treatment = -1;
  int outcome = -1;

  int col_index(const std::string& name) const;
  const DiscreteColumn& col(const std::string& name) const;
};

// Quantile discretization. Continuous columns split at the empirical
// k/bins-quantiles (order statistic at ceil(q*n); ties at a boundary fall to
// the lower bin); factor columns pass through unchanged. Columns with fewer
// distinct values than bins collapse to one level per distinct value and are
// flagged. Rejects bins < 2 and factor codes outside [0, 255].
DiscreteDataset discretize(const RawDataset& data, int bins);

// Row subset (used for per-arm views). Level counts are preserved even when
// levels vanish from the subsample.
DiscreteDataset filter_rows(const DiscreteDataset& data, const std::vector<std::int64_t>& rows);

// Column subset in the given order; role indices are remapped or dropped.
DiscreteDataset select_columns(const DiscreteDataset& data, const std::vector<int>& cols);

// Cross-classification of columns i and j within every realized configuration
// of the conditioning columns. Only configurations with nonzero count are
// materialized.
struct ContingencyTable {
  int var_i = -1;
  int var_j = -1;
  std::vector<int> cond;
  int levels_i = 0;  // nominal level counts of the underlying columns
  int levels_j = 0;
  std::uint64_t n = 0;

  // Parallel arrays, one entry per realized conditioning configuration.
  std::vector<std::uint64_t> configs;            // packed mixed-radix config code
  std::vector<std::vector<std::uint32_t>> cell;  // levels_i * levels_j counts, row-major
  std::vector<std::vector<std::uint32_t>> row_marginal;  // per config, levels_i
  std::vector<std::vector<std::uint32_t>> col_marginal;  // per config, levels_j
  std::vector<std::uint32_t> config_total;               // per config

  std::size_t n_configs() const { return configs.size(); }
};

// Throws std::invalid_argument if i == j or if i or j appears in cond.
ContingencyTable contingency(const DiscreteDataset& data, int i, int j,
                             const std::vector<int>& cond);

struct CsvOptions {
  std::vector<std::string> factor_cols;  // empty: every all-integer column is a factor
  std::string treatment = "T";
  std::string outcome = "Y";
  bool require_roles = true;
};

// Header-row CSV with optional leading '#' comment lines. Missing or
// non-finite fields are rejected with instructions to pre-filter.
RawDataset read_csv(const std::string& path, const CsvOptions& opts);

// Writes `# key=value` provenance lines, then header row, then data rows at
// full round-trip precision.
void write_csv(const RawDataset& data, const std::string& path,
               const std::vector<std::pair<std::string, std::string>>& provenance);

}  // namespace confsel
