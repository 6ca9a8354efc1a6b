#include "confsel/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "confsel/dataset.hpp"
#include "confsel/dgp.hpp"
#include "confsel/estimators.hpp"
#include "confsel/graphs.hpp"
#include "confsel/harness.hpp"
#include "confsel/targets.hpp"

namespace confsel {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Flat key=value config files. Values act as defaults; command-line flags
// override them. A key may feed several subcommands (e.g. `seed`).

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("config line " + std::to_string(lineno) + " is not key=value");
    }
    kv[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
  }
  return kv;
}

class ConfigBinder {
 public:
  void bind(const std::string& key, std::function<void(const std::string&)> fn) {
    binders_[key] = std::move(fn);
  }
  void apply(const std::map<std::string, std::string>& kv) const {
    for (const auto& [key, value] : kv) {
      const auto it = binders_.find(key);
      if (it == binders_.end()) throw ConfigError("unknown config key '" + key + "'");
      it->second(value);
    }
  }

 private:
  std::map<std::string, std::function<void(const std::string&)>> binders_;
};

std::int64_t cfg_int(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    throw ConfigError("config key '" + key + "' needs an integer, got '" + v + "'");
  }
  return x;
}

std::uint64_t cfg_u64(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    throw ConfigError("config key '" + key + "' needs an unsigned integer, got '" + v + "'");
  }
  return x;
}

double cfg_double(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') {
    throw ConfigError("config key '" + key + "' needs a number, got '" + v + "'");
  }
  return x;
}

bool cfg_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "' needs a boolean, got '" + v + "'");
}

// ---------------------------------------------------------------------------
// Shared plumbing.

struct OutputTarget {
  std::ofstream file;
  std::ostream* os = &std::cout;

  explicit OutputTarget(const std::string& path) {
    if (path.empty()) return;
    file.open(path);
    if (!file) throw DataFormatError("cannot open '" + path + "' for writing");
    os = &file;
  }
  std::ostream& stream() { return *os; }
};

void write_header(std::ostream& os, const Provenance& prov) {
  for (const auto& [k, v] : prov) os << "# " << k << "=" << v << "\n";
}

std::string factor_names(const RawDataset& data) {
  std::vector<std::string> names;
  for (const RawColumn& col : data.columns) {
    if (col.kind == ColumnKind::factor) names.push_back(col.name);
  }
  return join(names, ",");
}

std::vector<std::string> column_names(const DiscreteDataset& data, const std::vector<int>& idx) {
  std::vector<std::string> names;
  names.reserve(idx.size());
  for (int c : idx) names.push_back(data.columns[static_cast<std::size_t>(c)].name);
  return names;
}

// ---------------------------------------------------------------------------
// Subcommand argument bundles. Fields start at their built-in defaults; a
// config file may overwrite them; explicit flags win last.

struct SimulateArgs {
  int setting = 1;
  std::int64_t n = 1000;
  std::string outcome = "linear";
  std::uint64_t seed = 1;
  int p_total = 100;
  bool audit_columns = false;
  std::string out;
};

struct SelectArgs {
  std::string data;
  std::string method = "mmpc";
  double alpha = 0.05;
  int bins = 3;
  int max_cond_size = 3;
  bool size_guard = false;
  std::string factors;
  std::string treatment = "T";
  std::string outcome_col = "Y";
  std::string out;
};

struct EstimateArgs {
  std::string data;
  std::string set;
  std::string estimator = "psm";
  double caliper = 0.0;
  std::string factors;
  std::string treatment = "T";
  std::string outcome_col = "Y";
  std::string out;
};

struct EvaluateArgs {
  int setting = 1;
  std::string outcome = "linear";
  std::string ns = "2000";
  std::string methods = "mmpc";
  int replications = 200;
  std::uint64_t seed = 1;
  int workers = 0;
  int bins = 3;
  double alpha = 0.05;
  int max_cond_size = 3;
  bool size_guard = false;
  int p_total = 100;
  std::string sets;
  bool estimation = true;
  double caliper = 0.0;
  std::int64_t ace_draws = 10'000'000;
  std::string out_dir = ".";
};

// ---------------------------------------------------------------------------
// simulate

int run_simulate(const SimulateArgs& a) {
  if (a.out.empty()) throw ConfigError("simulate needs --out");
  SimConfig sc;
  sc.setting = a.setting;
  sc.n = a.n;
  sc.outcome = outcome_from_string(a.outcome);
  sc.seed = a.seed;
  sc.p_total = a.p_total;
  sc.emit_audit_columns = a.audit_columns;
  const RawDataset data = simulate(sc);

  Provenance prov{{"subcommand", "simulate"},
                  {"setting", std::to_string(sc.setting)},
                  {"n", std::to_string(sc.n)},
                  {"outcome", to_string(sc.outcome)},
                  {"seed", std::to_string(sc.seed)},
                  {"p_total", std::to_string(sc.p_total)},
                  {"audit_columns", sc.emit_audit_columns ? "true" : "false"},
                  {"treatment", "T"},
                  {"outcome_col", "Y"},
                  {"factors", factor_names(data)}};
  write_csv(data, a.out, prov);
  std::cout << "wrote " << a.out << " (" << data.n << " rows, " << data.columns.size()
            << " columns)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// select

int run_select(const SelectArgs& a) {
  if (a.data.empty()) throw ConfigError("select needs --data");
  CsvOptions opts;
  opts.factor_cols = split_csv(a.factors);
  opts.treatment = a.treatment;
  opts.outcome = a.outcome_col;
  const RawDataset raw = read_csv(a.data, opts);
  const DiscreteDataset disc = discretize(raw, a.bins);

  TargetConfig tc;
  tc.method = selection_method_from_string(a.method);
  tc.ci.alpha = a.alpha;
  tc.ci.size_guard = a.size_guard;
  tc.mmpc.max_cond_size = a.max_cond_size;
  const TargetSubsets sel = estimate_targets(disc, tc);

  OutputTarget target(a.out);
  std::ostream& os = target.stream();
  write_header(os, {{"subcommand", "select"},
                    {"data", a.data},
                    {"method", a.method},
                    {"alpha", fmt(a.alpha)},
                    {"bins", std::to_string(a.bins)},
                    {"max_cond_size", std::to_string(a.max_cond_size)},
                    {"size_guard", a.size_guard ? "true" : "false"},
                    {"treatment", a.treatment},
                    {"outcome_col", a.outcome_col},
                    {"factors", factor_names(raw)},
                    {"n", std::to_string(raw.n)}});
  for (const std::string& w : sel.warnings) os << "# warning: " << w << "\n";
  for (const char* key : TargetSubsets::kSetKeys) {
    os << key << "=" << join(column_names(disc, sel.set(key)), ",") << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// estimate

int run_estimate(const EstimateArgs& a) {
  if (a.data.empty()) throw ConfigError("estimate needs --data");
  if (a.estimator != "psm" && a.estimator != "tmle") {
    throw ConfigError("unknown estimator '" + a.estimator + "' (expected psm or tmle)");
  }
  CsvOptions opts;
  opts.factor_cols = split_csv(a.factors);
  opts.treatment = a.treatment;
  opts.outcome = a.outcome_col;
  const RawDataset raw = read_csv(a.data, opts);

  std::vector<int> s;
  for (const std::string& name : split_csv(a.set)) {
    const int idx = raw.col_index(name);
    if (idx < 0) throw ConfigError("column '" + name + "' is not in " + a.data);
    s.push_back(idx);
  }
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());

  AceEstimate est;
  if (a.estimator == "psm") {
    PsmConfig pc;
    pc.caliper = a.caliper;
    est = psm_ace(raw, s, pc);
  } else {
    est = tmle_ace(raw, s, TmleConfig{});
  }

  std::vector<std::string> set_names;
  for (int idx : s) set_names.push_back(raw.columns[static_cast<std::size_t>(idx)].name);

  OutputTarget target(a.out);
  std::ostream& os = target.stream();
  write_header(os, {{"subcommand", "estimate"},
                    {"data", a.data},
                    {"estimator", a.estimator},
                    {"set", join(set_names, ",")},
                    {"caliper", fmt(a.caliper)},
                    {"g_bound", fmt(TmleConfig{}.g_bound)},
                    {"treatment", a.treatment},
                    {"outcome_col", a.outcome_col},
                    {"factors", factor_names(raw)},
                    {"n", std::to_string(raw.n)}});
  os << "estimator,set,cardinality,beta_hat,se,ci_low,ci_high,n_used,fluctuation_residual\n";
  os << est.estimator << "," << join(set_names, "|") << "," << set_names.size() << ","
     << fmt(est.beta_hat) << "," << fmt(est.se) << "," << fmt(est.ci_low) << ","
     << fmt(est.ci_high) << "," << est.n_used << "," << fmt(est.fluctuation_residual) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

int run_evaluate(const EvaluateArgs& a) {
  GridSpec spec;
  spec.setting = a.setting;
  spec.outcome = outcome_from_string(a.outcome);
  spec.ns.clear();
  for (const std::string& tok : split_csv(a.ns)) spec.ns.push_back(cfg_int(tok, "ns"));
  spec.methods.clear();
  for (const std::string& tok : split_csv(a.methods)) {
    spec.methods.push_back(selection_method_from_string(tok));
  }
  spec.replications = a.replications;
  spec.seed = a.seed;
  spec.workers = a.workers;
  spec.bins = a.bins;
  spec.alpha = a.alpha;
  spec.max_cond_size = a.max_cond_size;
  spec.size_guard = a.size_guard;
  spec.p_total = a.p_total;
  spec.with_estimation = a.estimation;
  spec.estimation_sets = split_csv(a.sets);
  spec.caliper = a.caliper;
  spec.true_ace_draws = a.ace_draws;

  const GridResult result = run_grid(spec);

  std::filesystem::create_directories(a.out_dir);
  const std::string metrics_path = a.out_dir + "/metrics.csv";
  const std::string raw_path = a.out_dir + "/raw.csv";
  const std::string summary_path = a.out_dir + "/summary.md";

  Provenance prov{{"subcommand", "evaluate"},
                  {"ns", a.ns},
                  {"methods", a.methods},
                  {"seed", std::to_string(a.seed)},
                  {"workers", std::to_string(a.workers)},
                  {"bins", std::to_string(a.bins)},
                  {"alpha", fmt(a.alpha)},
                  {"max_cond_size", std::to_string(a.max_cond_size)},
                  {"size_guard", a.size_guard ? "true" : "false"},
                  {"p_total", std::to_string(a.p_total)},
                  {"estimation", a.estimation ? "true" : "false"},
                  {"sets", a.sets},
                  {"caliper", fmt(a.caliper)},
                  {"ace_draws", std::to_string(a.ace_draws)}};
  write_metrics_csv(result.metrics, metrics_path, prov);

  Provenance raw_prov = prov;
  raw_prov.emplace_back("setting", std::to_string(a.setting));
  raw_prov.emplace_back("outcome", a.outcome);
  raw_prov.emplace_back("replications", std::to_string(a.replications));
  raw_prov.emplace_back("true_beta", fmt(result.metrics.true_beta));
  write_raw_csv(result.records, raw_path, raw_prov);
  write_summary_md(result.metrics, summary_path, prov);

  std::cout << "wrote " << metrics_path << "\n";
  std::cout << "wrote " << raw_path << "\n";
  std::cout << "wrote " << summary_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// oracle-check: run the selection pipeline against perfect d-separation
// oracles on the two benchmark graphs and compare each target set with its
// hand-derived value.

TruthSets setting1_dsep_sets() {
  return {{"xt", {"X1", "X2", "X3", "X4", "X7"}},
          {"qt", {"X1", "X2", "X7"}},
          {"xy", {"X1", "X2", "X5", "X6", "X8"}},
          {"zy", {"X1", "X2", "X8"}},
          {"xty", {"X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8"}},
          {"wy", {"X1", "X2", "X5", "X6", "X7", "X8"}}};
}

TruthSets setting2_dsep_sets() {
  return {{"xt", {"X1", "X2", "X3", "X4", "X7", "X9"}},
          {"qt", {"X1", "X2", "X4", "X7", "X9"}},
          {"xy", {"X1", "X2", "X4", "X5", "X6", "X8", "X9"}},
          {"zy", {"X1", "X2", "X4", "X8", "X9"}},
          {"xty", {"X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8", "X9"}},
          {"wy", {"X1", "X2", "X4", "X5", "X6", "X7", "X8", "X9"}}};
}

int run_oracle_check() {
  struct Case {
    const char* label;
    Dag dag;
    TruthSets expected;
  };
  std::vector<Case> cases;
  cases.push_back({"setting1", setting1_dag(), setting1_dsep_sets()});
  cases.push_back({"setting2", setting2_dag(), setting2_dsep_sets()});

  bool all_ok = true;
  for (const Case& c : cases) {
    std::vector<int> observed, covariates;
    for (int v = 0; v < c.dag.p; ++v) {
      if (c.dag.names[static_cast<std::size_t>(v)][0] != 'U') observed.push_back(v);
      if (c.dag.names[static_cast<std::size_t>(v)][0] == 'X') covariates.push_back(v);
    }
    const DsepOracle oracle(c.dag, observed);
    MmpcConfig cfg;
    cfg.max_cond_size = -1;  // perfect oracle: no reason to bound the search
    const TargetSubsets sel = estimate_targets_oracle(
        oracle, c.dag.index_of("T"), c.dag.index_of("Y"), covariates, cfg);
    for (const char* key : TargetSubsets::kSetKeys) {
      std::vector<std::string> got;
      for (int v : sel.set(key)) got.push_back(c.dag.names[static_cast<std::size_t>(v)]);
      std::vector<std::string> want = c.expected.at(key);
      std::sort(got.begin(), got.end());
      std::sort(want.begin(), want.end());
      if (got == want) {
        std::cout << "[PASS] " << c.label << " " << key << " = {" << join(want, ",") << "}\n";
      } else {
        all_ok = false;
        std::cout << "[FAIL] " << c.label << " " << key << ": expected {" << join(want, ",")
                  << "} got {" << join(got, ",") << "}\n";
      }
    }
  }
  return all_ok ? 0 : 1;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"Confounder-set selection and average-causal-effect estimation"};
  app.name("confsel");
  app.require_subcommand(1);

  SimulateArgs sim;
  SelectArgs sel;
  EstimateArgs est;
  EvaluateArgs ev;
  std::string config_path;

  app.add_option("--config", config_path,
                 "flat key=value config file; command-line flags override its values");

  CLI::App* c_sim = app.add_subcommand("simulate", "draw a synthetic dataset and write it as CSV");
  c_sim->add_option("--setting", sim.setting, "scenario (1: no latents, 2: latent confounding)");
  c_sim->add_option("--n", sim.n, "sample size");
  c_sim->add_option("--outcome", sim.outcome, "outcome model: linear, binary or nonlinear");
  c_sim->add_option("--seed", sim.seed, "base seed for all randomness");
  c_sim->add_option("--p-total", sim.p_total, "total covariate count (10..100)");
  c_sim->add_flag("--audit-columns", sim.audit_columns,
                  "also emit potential outcomes (and latents) as '_'-prefixed columns");
  c_sim->add_option("--out", sim.out, "output CSV path");

  CLI::App* c_sel = app.add_subcommand("select", "estimate the six target subsets from a CSV");
  c_sel->add_option("--data", sel.data, "input CSV path");
  c_sel->add_option("--method", sel.method, "selection method: mmpc or mmhc");
  c_sel->add_option("--alpha", sel.alpha, "test level for conditional-independence tests");
  c_sel->add_option("--bins", sel.bins, "quantile bins for continuous columns");
  c_sel->add_option("--max-cond-size", sel.max_cond_size,
                    "largest conditioning set (negative: unbounded)");
  c_sel->add_flag("--size-guard,!--no-size-guard", sel.size_guard,
                  "treat tests with fewer than five rows per cell as independent (default off)");
  c_sel->add_option("--factors", sel.factors,
                    "comma-separated factor columns (default: integer-valued columns)");
  c_sel->add_option("--treatment", sel.treatment, "treatment column name");
  c_sel->add_option("--outcome-col", sel.outcome_col, "outcome column name");
  c_sel->add_option("--out", sel.out, "output path (default: stdout)");

  CLI::App* c_est = app.add_subcommand("estimate", "estimate the average causal effect on a CSV");
  c_est->add_option("--data", est.data, "input CSV path");
  c_est->add_option("--set", est.set,
                    "comma-separated adjustment columns; empty for the no-adjustment fallback");
  c_est->add_option("--estimator", est.estimator, "psm or tmle");
  c_est->add_option("--caliper", est.caliper,
                    "drop matches farther than this in propensity score (0: keep all)");
  c_est->add_option("--factors", est.factors,
                    "comma-separated factor columns (default: integer-valued columns)");
  c_est->add_option("--treatment", est.treatment, "treatment column name");
  c_est->add_option("--outcome-col", est.outcome_col, "outcome column name");
  c_est->add_option("--out", est.out, "output path (default: stdout)");

  CLI::App* c_ev = app.add_subcommand("evaluate", "run the replication study and write metrics");
  c_ev->add_option("--setting", ev.setting, "scenario (1: no latents, 2: latent confounding)");
  c_ev->add_option("--outcome", ev.outcome, "outcome model: linear, binary or nonlinear");
  c_ev->add_option("--ns", ev.ns, "comma-separated sample sizes");
  c_ev->add_option("--methods", ev.methods, "comma-separated selection methods");
  c_ev->add_option("--replications", ev.replications, "replications per (n, method) cell");
  c_ev->add_option("--seed", ev.seed, "base seed for all randomness");
  c_ev->add_option("--workers", ev.workers, "worker threads (0: logical cores)");
  c_ev->add_option("--bins", ev.bins, "quantile bins for continuous columns");
  c_ev->add_option("--alpha", ev.alpha, "test level for conditional-independence tests");
  c_ev->add_option("--max-cond-size", ev.max_cond_size,
                   "largest conditioning set (negative: unbounded)");
  c_ev->add_flag("--size-guard,!--no-size-guard", ev.size_guard,
                 "treat tests with fewer than five rows per cell as independent (default off)");
  c_ev->add_option("--p-total", ev.p_total, "total covariate count (10..100)");
  c_ev->add_option("--sets", ev.sets,
                   "comma-separated set keys to run estimators on (default: all)");
  c_ev->add_flag("--estimation,!--no-estimation", ev.estimation,
                 "run effect estimators on the selected sets");
  c_ev->add_option("--caliper", ev.caliper, "propensity-score caliper for matching");
  c_ev->add_option("--ace-draws", ev.ace_draws,
                   "Monte-Carlo draws for the true effect of nonlinear outcomes");
  c_ev->add_option("--out-dir", ev.out_dir, "directory for metrics.csv, raw.csv, summary.md");

  CLI::App* c_orc = app.add_subcommand(
      "oracle-check", "verify selection against d-separation oracles on the benchmark graphs");

  try {
    // Apply config-file values before parsing so explicit flags override them.
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) {
        config_path = args[i + 1];
      } else if (args[i].rfind("--config=", 0) == 0) {
        config_path = args[i].substr(9);
      }
    }
    if (!config_path.empty()) {
      ConfigBinder binder;
      binder.bind("setting", [&](const std::string& v) {
        sim.setting = static_cast<int>(cfg_int(v, "setting"));
        ev.setting = sim.setting;
      });
      binder.bind("n", [&](const std::string& v) { sim.n = cfg_int(v, "n"); });
      binder.bind("outcome", [&](const std::string& v) { sim.outcome = ev.outcome = v; });
      binder.bind("seed", [&](const std::string& v) { sim.seed = ev.seed = cfg_u64(v, "seed"); });
      binder.bind("p_total", [&](const std::string& v) {
        sim.p_total = ev.p_total = static_cast<int>(cfg_int(v, "p_total"));
      });
      binder.bind("audit_columns",
                  [&](const std::string& v) { sim.audit_columns = cfg_bool(v, "audit_columns"); });
      binder.bind("out", [&](const std::string& v) { sim.out = sel.out = est.out = v; });
      binder.bind("data", [&](const std::string& v) { sel.data = est.data = v; });
      binder.bind("method", [&](const std::string& v) { sel.method = v; });
      binder.bind("methods", [&](const std::string& v) { ev.methods = v; });
      binder.bind("alpha",
                  [&](const std::string& v) { sel.alpha = ev.alpha = cfg_double(v, "alpha"); });
      binder.bind("bins", [&](const std::string& v) {
        sel.bins = ev.bins = static_cast<int>(cfg_int(v, "bins"));
      });
      binder.bind("max_cond_size", [&](const std::string& v) {
        sel.max_cond_size = ev.max_cond_size = static_cast<int>(cfg_int(v, "max_cond_size"));
      });
      binder.bind("size_guard", [&](const std::string& v) {
        sel.size_guard = ev.size_guard = cfg_bool(v, "size_guard");
      });
      binder.bind("factors", [&](const std::string& v) { sel.factors = est.factors = v; });
      binder.bind("treatment", [&](const std::string& v) { sel.treatment = est.treatment = v; });
      binder.bind("outcome_col",
                  [&](const std::string& v) { sel.outcome_col = est.outcome_col = v; });
      binder.bind("set", [&](const std::string& v) { est.set = v; });
      binder.bind("estimator", [&](const std::string& v) { est.estimator = v; });
      binder.bind("caliper", [&](const std::string& v) {
        est.caliper = ev.caliper = cfg_double(v, "caliper");
      });
      binder.bind("ns", [&](const std::string& v) { ev.ns = v; });
      binder.bind("replications", [&](const std::string& v) {
        ev.replications = static_cast<int>(cfg_int(v, "replications"));
      });
      binder.bind("workers", [&](const std::string& v) {
        ev.workers = static_cast<int>(cfg_int(v, "workers"));
      });
      binder.bind("sets", [&](const std::string& v) { ev.sets = v; });
      binder.bind("estimation",
                  [&](const std::string& v) { ev.estimation = cfg_bool(v, "estimation"); });
      binder.bind("ace_draws",
                  [&](const std::string& v) { ev.ace_draws = cfg_int(v, "ace_draws"); });
      binder.bind("out_dir", [&](const std::string& v) { ev.out_dir = v; });
      binder.apply(read_config_file(config_path));
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));

    if (c_sim->parsed()) return run_simulate(sim);
    if (c_sel->parsed()) return run_select(sel);
    if (c_est->parsed()) return run_estimate(est);
    if (c_ev->parsed()) return run_evaluate(ev);
    if (c_orc->parsed()) return run_oracle_check();
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const EstimationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace confsel
