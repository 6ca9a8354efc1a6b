#include "confsel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace confsel {

namespace {

template <typename Dataset>
int find_col(const Dataset& d, const std::string& name) {
  for (std::size_t k = 0; k < d.columns.size(); ++k)
    if (d.columns[k].name == name) return static_cast<int>(k);
  return -1;
}

DiscreteColumn pass_through_factor(const RawColumn& c) {
  DiscreteColumn out;
  out.name = c.name;
  out.codes.reserve(c.values.size());
  double max_code = 0.0;
  double min_code = 0.0;
  bool first = true;
  for (double v : c.values) {
    if (!(v >= 0.0 && v <= 255.0) || v != std::floor(v))
      throw DataFormatError("factor column '" + c.name +
                            "' must hold integer codes in [0, 255]");
    out.codes.push_back(static_cast<std::uint8_t>(v));
    if (first || v > max_code) max_code = v;
    if (first || v < min_code) min_code = v;
    first = false;
  }
  out.n_levels = first ? 1 : static_cast<int>(max_code) + 1;
  out.constant = first || max_code == min_code;
  return out;
}

DiscreteColumn quantile_split(const RawColumn& c, int bins) {
  DiscreteColumn out;
  out.name = c.name;
  const std::int64_t n = static_cast<std::int64_t>(c.values.size());
  std::vector<double> sorted(c.values);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct(sorted);
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> bounds;
  if (static_cast<int>(distinct.size()) <= bins) {
    // Too few values to fill the requested bins: one level per distinct value.
    bounds.assign(distinct.begin(), distinct.end() - 1);
  } else {
    for (int k = 1; k < bins; ++k) {
      const std::int64_t rank = (k * n + bins - 1) / bins;  // ceil(k*n/bins), 1-based
      bounds.push_back(sorted[rank - 1]);
    }
    bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
    // A boundary equal to the maximum would leave its upper bin empty.
    while (!bounds.empty() && bounds.back() >= sorted.back()) bounds.pop_back();
  }

  out.codes.reserve(c.values.size());
  for (double v : c.values) {
    // Count of boundaries strictly below v; a value equal to a boundary
    // lands in the lower bin.
    const auto it = std::lower_bound(bounds.begin(), bounds.end(), v);
    out.codes.push_back(static_cast<std::uint8_t>(it - bounds.begin()));
  }
  out.n_levels = static_cast<int>(bounds.size()) + 1;
  out.constant = distinct.size() <= 1;
  out.collapsed = out.n_levels < bins;
  return out;
}

bool integer_token(const std::string& t) {
  if (t.empty()) return false;
  for (char ch : t)
    if (ch < '0' || ch > '9') return false;
  return true;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

int RawDataset::col_index(const std::string& name) const { return find_col(*this, name); }
int DiscreteDataset::col_index(const std::string& name) const { return find_col(*this, name); }

const RawColumn& RawDataset::col(const std::string& name) const {
  int k = col_index(name);
  if (k < 0) throw std::invalid_argument("no column named '" + name + "'");
  return columns[k];
}

const DiscreteColumn& DiscreteDataset::col(const std::string& name) const {
  int k = col_index(name);
  if (k < 0) throw std::invalid_argument("no column named '" + name + "'");
  return columns[k];
}

DiscreteDataset discretize(const RawDataset& data, int bins) {
  if (bins < 2) throw ConfigError("discretize: bins must be at least 2");
  if (bins > 255) throw ConfigError("discretize: bins must be at most 255");
  DiscreteDataset out;
  out.n = data.n;
  out.treatment = data.treatment;
  out.outcome = data.outcome;
  out.columns.reserve(data.columns.size());
  for (const RawColumn& c : data.columns) {
    if (static_cast<std::int64_t>(c.values.size()) != data.n)
      throw DataFormatError("column '" + c.name + "' has inconsistent length");
    for (double v : c.values)
      if (!std::isfinite(v))
        throw DataFormatError("column '" + c.name +
                              "' has a missing or non-finite value; filter rows first");
    out.columns.push_back(c.kind == ColumnKind::factor ? pass_through_factor(c)
                                                       : quantile_split(c, bins));
  }
  return out;
}

DiscreteDataset filter_rows(const DiscreteDataset& data, const std::vector<std::int64_t>& rows) {
  DiscreteDataset out;
  out.n = static_cast<std::int64_t>(rows.size());
  out.treatment = data.treatment;
  out.outcome = data.outcome;
  out.columns.reserve(data.columns.size());
  for (const DiscreteColumn& c : data.columns) {
    DiscreteColumn nc;
    nc.name = c.name;
    nc.n_levels = c.n_levels;
    nc.constant = c.constant;
    nc.collapsed = c.collapsed;
    nc.codes.reserve(rows.size());
    for (std::int64_t r : rows) nc.codes.push_back(c.codes[static_cast<std::size_t>(r)]);
    out.columns.push_back(std::move(nc));
  }
  return out;
}

DiscreteDataset select_columns(const DiscreteDataset& data, const std::vector<int>& cols) {
  DiscreteDataset out;
  out.n = data.n;
  out.columns.reserve(cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const int c = cols[k];
    out.columns.push_back(data.columns.at(static_cast<std::size_t>(c)));
    if (c == data.treatment) out.treatment = static_cast<int>(k);
    if (c == data.outcome) out.outcome = static_cast<int>(k);
  }
  return out;
}

ContingencyTable contingency(const DiscreteDataset& data, int i, int j,
                             const std::vector<int>& cond) {
  if (i == j) throw std::invalid_argument("contingency: i and j must differ");
  for (int k : cond)
    if (k == i || k == j)
      throw std::invalid_argument("contingency: conditioning set overlaps {i, j}");

  ContingencyTable t;
  t.var_i = i;
  t.var_j = j;
  t.cond = cond;
  const DiscreteColumn& ci = data.columns.at(static_cast<std::size_t>(i));
  const DiscreteColumn& cj = data.columns.at(static_cast<std::size_t>(j));
  t.levels_i = ci.n_levels;
  t.levels_j = cj.n_levels;
  t.n = static_cast<std::uint64_t>(data.n);

  // Mixed-radix strides over the conditioning columns.
  std::uint64_t space = 1;
  std::vector<std::uint64_t> stride(cond.size(), 0);
  std::vector<const std::uint8_t*> ccol(cond.size(), nullptr);
  for (std::size_t m = 0; m < cond.size(); ++m) {
    const DiscreteColumn& c = data.columns.at(static_cast<std::size_t>(cond[m]));
    stride[m] = space;
    space *= static_cast<std::uint64_t>(c.n_levels);
    ccol[m] = c.codes.data();
  }

  const int ab = t.levels_i * t.levels_j;
  const std::uint8_t* icol = ci.codes.data();
  const std::uint8_t* jcol = cj.codes.data();

  // slot lookup: dense when the configuration space is small, hashed otherwise
  const bool dense = space <= (1u << 22);
  std::vector<std::int32_t> dense_slot;
  std::unordered_map<std::uint64_t, std::int32_t> hash_slot;
  if (dense) dense_slot.assign(static_cast<std::size_t>(space), -1);

  std::vector<std::vector<std::uint32_t>>& cells = t.cell;
  for (std::int64_t r = 0; r < data.n; ++r) {
    std::uint64_t cfg = 0;
    for (std::size_t m = 0; m < cond.size(); ++m)
      cfg += stride[m] * ccol[m][static_cast<std::size_t>(r)];
    std::int32_t slot;
    if (dense) {
      slot = dense_slot[static_cast<std::size_t>(cfg)];
      if (slot < 0) {
        slot = static_cast<std::int32_t>(cells.size());
        dense_slot[static_cast<std::size_t>(cfg)] = slot;
        t.configs.push_back(cfg);
        cells.emplace_back(static_cast<std::size_t>(ab), 0u);
      }
    } else {
      auto [it, inserted] = hash_slot.try_emplace(cfg, static_cast<std::int32_t>(cells.size()));
      if (inserted) {
        t.configs.push_back(cfg);
        cells.emplace_back(static_cast<std::size_t>(ab), 0u);
      }
      slot = it->second;
    }
    cells[static_cast<std::size_t>(slot)]
         [static_cast<std::size_t>(icol[r]) * t.levels_j + jcol[r]]++;
  }

  // Deterministic config order regardless of row order.
  std::vector<std::size_t> order(t.configs.size());
  for (std::size_t s = 0; s < order.size(); ++s) order[s] = s;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return t.configs[a] < t.configs[b]; });
  std::vector<std::uint64_t> cfgs;
  std::vector<std::vector<std::uint32_t>> sorted_cells;
  cfgs.reserve(order.size());
  sorted_cells.reserve(order.size());
  for (std::size_t s : order) {
    cfgs.push_back(t.configs[s]);
    sorted_cells.push_back(std::move(cells[s]));
  }
  t.configs = std::move(cfgs);
  t.cell = std::move(sorted_cells);

  t.row_marginal.resize(t.cell.size());
  t.col_marginal.resize(t.cell.size());
  t.config_total.resize(t.cell.size());
  for (std::size_t s = 0; s < t.cell.size(); ++s) {
    auto& rm = t.row_marginal[s];
    auto& cm = t.col_marginal[s];
    rm.assign(static_cast<std::size_t>(t.levels_i), 0u);
    cm.assign(static_cast<std::size_t>(t.levels_j), 0u);
    std::uint32_t tot = 0;
    for (int a = 0; a < t.levels_i; ++a)
      for (int b = 0; b < t.levels_j; ++b) {
        const std::uint32_t v = t.cell[s][static_cast<std::size_t>(a) * t.levels_j + b];
        rm[static_cast<std::size_t>(a)] += v;
        cm[static_cast<std::size_t>(b)] += v;
        tot += v;
      }
    t.config_total[s] = tot;
  }
  return t;
}

RawDataset read_csv(const std::string& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("cannot open '" + path + "'");

  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;  // provenance comments
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) header.push_back(trim(tok));
    break;
  }
  if (header.empty()) throw DataFormatError("'" + path + "' has no header row");

  RawDataset d;
  d.columns.resize(header.size());
  std::vector<bool> all_int(header.size(), true);
  for (std::size_t k = 0; k < header.size(); ++k) d.columns[k].name = header[k];

  std::int64_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string tok;
    std::size_t k = 0;
    while (std::getline(ss, tok, ',')) {
      if (k >= header.size())
        throw DataFormatError("row " + std::to_string(row + 1) + " has too many fields");
      tok = trim(tok);
      if (tok.empty() || tok == "NA" || tok == "nan" || tok == "NaN")
        throw DataFormatError("missing value at row " + std::to_string(row + 1) +
                              ", column '" + header[k] + "'; remove or impute rows first");
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0' || !std::isfinite(v))
        throw DataFormatError("unparseable value '" + tok + "' at row " +
                              std::to_string(row + 1) + ", column '" + header[k] + "'");
      if (!integer_token(tok)) all_int[k] = false;
      d.columns[k].values.push_back(v);
      ++k;
    }
    if (k != header.size())
      throw DataFormatError("row " + std::to_string(row + 1) + " has too few fields");
    ++row;
  }
  d.n = row;
  if (d.n == 0) throw DataFormatError("'" + path + "' has a header but no data rows");

  if (opts.factor_cols.empty()) {
    for (std::size_t k = 0; k < header.size(); ++k)
      d.columns[k].kind = all_int[k] ? ColumnKind::factor : ColumnKind::continuous;
  } else {
    for (const std::string& name : opts.factor_cols) {
      const int k = d.col_index(name);
      if (k < 0) throw ConfigError("--factor-cols names unknown column '" + name + "'");
      d.columns[static_cast<std::size_t>(k)].kind = ColumnKind::factor;
    }
  }

  d.treatment = d.col_index(opts.treatment);
  d.outcome = d.col_index(opts.outcome);
  if (opts.require_roles) {
    if (d.treatment < 0)
      throw DataFormatError("treatment column '" + opts.treatment + "' not found");
    if (d.outcome < 0) throw DataFormatError("outcome column '" + opts.outcome + "' not found");
    for (double v : d.columns[static_cast<std::size_t>(d.treatment)].values)
      if (v != 0.0 && v != 1.0)
        throw DataFormatError("treatment column must be coded {0,1}");
    d.columns[static_cast<std::size_t>(d.treatment)].kind = ColumnKind::factor;
  }
  return d;
}

void write_csv(const RawDataset& data, const std::string& path,
               const std::vector<std::pair<std::string, std::string>>& provenance) {
  std::ofstream out(path);
  if (!out) throw DataFormatError("cannot write '" + path + "'");
  for (const auto& [k, v] : provenance) out << "# " << k << "=" << v << "\n";
  for (std::size_t k = 0; k < data.columns.size(); ++k)
    out << data.columns[k].name << (k + 1 < data.columns.size() ? ',' : '\n');
  char buf[40];
  for (std::int64_t r = 0; r < data.n; ++r) {
    for (std::size_t k = 0; k < data.columns.size(); ++k) {
      const RawColumn& c = data.columns[k];
      const double v = c.values[static_cast<std::size_t>(r)];
      if (c.kind == ColumnKind::factor) {
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", v);
      }
      out << buf << (k + 1 < data.columns.size() ? ',' : '\n');
    }
  }
  if (!out) throw DataFormatError("write to '" + path + "' failed");
}

}  // namespace confsel
