#include "confsel/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "confsel/rng.hpp"

namespace confsel {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_u64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%llu", static_cast<unsigned long long>(v));
  return buf;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

// Data seed for one replication: depends on the base seed, the sample size
// and the replication index, but not on the selection method, so methods see
// identical datasets (paired comparisons).
std::uint64_t data_seed(std::uint64_t base, std::int64_t n, int replication) {
  const std::uint64_t cell = CounterRng::mix(base ^ CounterRng::mix(static_cast<std::uint64_t>(n)));
  return replication_seed(cell, replication);
}

void validate(const GridSpec& spec) {
  if (spec.replications < 1) throw ConfigError("replications must be at least 1");
  if (spec.ns.empty()) throw ConfigError("the grid needs at least one sample size");
  for (std::int64_t n : spec.ns) {
    if (n < 1) throw ConfigError("sample sizes must be positive");
  }
  if (spec.methods.empty()) throw ConfigError("the grid needs at least one method");
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  for (const std::string& key : spec.estimation_sets) {
    if (std::find(kAllSetKeys.begin(), kAllSetKeys.end(), key) == kAllSetKeys.end()) {
      throw ConfigError("unknown set key '" + key + "' in the estimation filter");
    }
  }
}

ReplicationRecord run_one(const GridSpec& spec, std::int64_t n, SelectionMethod method,
                          int r, const TruthSets& truth) {
  const auto t0 = std::chrono::steady_clock::now();

  ReplicationRecord rec;
  rec.n = n;
  rec.method = to_string(method);
  rec.replication = r;
  rec.seed = data_seed(spec.seed, n, r);

  SimConfig sc;
  sc.setting = spec.setting;
  sc.n = n;
  sc.outcome = spec.outcome;
  sc.seed = rec.seed;
  sc.p_total = spec.p_total;
  const RawDataset raw = simulate(sc);
  const DiscreteDataset disc = discretize(raw, spec.bins);

  TargetConfig tc;
  tc.method = method;
  tc.ci.alpha = spec.alpha;
  tc.ci.size_guard = spec.size_guard;
  tc.mmpc.max_cond_size = spec.max_cond_size;
  const TargetSubsets sel = estimate_targets(disc, tc);

  const std::vector<int> covs = covariate_indices(disc);
  for (const char* key_cstr : kAllSetKeys) {
    const std::string key = key_cstr;
    SetRecord sr;
    sr.key = key;
    const std::vector<int>& idx = key == "X" ? covs : sel.set(key);
    sr.selected.reserve(idx.size());
    for (int c : idx) sr.selected.push_back(disc.columns[c].name);

    // The full covariate vector has no selection target; it is scored as its
    // own reference so the superset/equal flags are trivially true and only
    // the unconfoundedness rule carries information.
    const std::vector<std::string>& ref = key == "X" ? sr.selected : truth.at(key);
    sr.flags = check_success(spec.setting, sr.selected, ref);

    if (spec.with_estimation &&
        (spec.estimation_sets.empty() || contains(spec.estimation_sets, key))) {
      sr.psm.attempted = true;
      try {
        PsmConfig pc;
        pc.caliper = spec.caliper;
        sr.psm.estimate = psm_ace(raw, idx, pc);
      } catch (const EstimationError& e) {
        sr.psm.failed = true;
        sr.psm.error = e.what();
      }
      sr.tmle.attempted = true;
      try {
        sr.tmle.estimate = tmle_ace(raw, idx, TmleConfig{});
      } catch (const EstimationError& e) {
        sr.tmle.failed = true;
        sr.tmle.error = e.what();
      }
    }
    rec.sets.push_back(std::move(sr));
  }

  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
  return rec;
}

const SetRecord* find_set(const ReplicationRecord& rec, const std::string& key) {
  for (const SetRecord& sr : rec.sets) {
    if (sr.key == key) return &sr;
  }
  return nullptr;
}

EstimatorMetrics fold_estimator(const std::vector<const EstimatorOutcome*>& outcomes,
                                double true_beta) {
  EstimatorMetrics m;
  std::vector<const AceEstimate*> ok;
  for (const EstimatorOutcome* o : outcomes) {
    if (!o->attempted) continue;
    if (o->failed) {
      ++m.failures;
    } else {
      ok.push_back(&o->estimate);
    }
  }
  m.used = static_cast<int>(ok.size());
  if (ok.empty()) {
    m.bias = m.sd = m.mse = m.cp = m.ciw = m.cil = m.ciu = kNan;
    return m;
  }
  const double r = static_cast<double>(ok.size());
  double mean_beta = 0.0, mse = 0.0, ciw = 0.0, cil = 0.0, ciu = 0.0;
  int covered = 0;
  for (const AceEstimate* e : ok) {
    mean_beta += e->beta_hat;
    const double err = e->beta_hat - true_beta;
    mse += err * err;
    ciw += e->ci_high - e->ci_low;
    cil += e->ci_low;
    ciu += e->ci_high;
    if (e->ci_low <= true_beta && true_beta <= e->ci_high) ++covered;
  }
  mean_beta /= r;
  double ss = 0.0;
  for (const AceEstimate* e : ok) {
    const double d = e->beta_hat - mean_beta;
    ss += d * d;
  }
  m.bias = mean_beta - true_beta;
  m.sd = std::sqrt(ss / r);
  m.mse = mse / r;
  m.cp = 100.0 * static_cast<double>(covered) / r;
  m.ciw = ciw / r;
  m.cil = cil / r;
  m.ciu = ciu / r;
  return m;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw DataFormatError("bad numeric field '" + s + "'");
  return v;
}

std::int64_t parse_int(const std::string& s) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw DataFormatError("bad integer field '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw DataFormatError("bad integer field '" + s + "'");
  return v;
}

void write_provenance(std::ofstream& out, const Provenance& provenance) {
  for (const auto& [k, v] : provenance) out << "# " << k << "=" << v << "\n";
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

GridResult run_grid(const GridSpec& spec) {
  validate(spec);
  const TruthSets truth = spec.setting == 1 ? setting1_truth() : setting2_truth();

  SimConfig ace_cfg;
  ace_cfg.setting = spec.setting;
  ace_cfg.outcome = spec.outcome;
  ace_cfg.n = 1;
  ace_cfg.p_total = 10;
  const double true_beta = true_ace(ace_cfg, spec.true_ace_draws);

  GridResult out;
  for (std::int64_t n : spec.ns) {
    for (SelectionMethod method : spec.methods) {
      std::vector<ReplicationRecord> cell(static_cast<std::size_t>(spec.replications));
      int workers = spec.workers > 0 ? spec.workers
                                     : static_cast<int>(std::thread::hardware_concurrency());
      workers = std::max(1, std::min(workers, spec.replications));

      std::atomic<int> next{0};
      std::mutex err_mu;
      std::exception_ptr err;
      auto work = [&]() {
        for (;;) {
          const int r = next.fetch_add(1);
          if (r >= spec.replications) return;
          {
            std::lock_guard<std::mutex> lock(err_mu);
            if (err) return;
          }
          try {
            cell[static_cast<std::size_t>(r)] = run_one(spec, n, method, r, truth);
          } catch (...) {
            std::lock_guard<std::mutex> lock(err_mu);
            if (!err) err = std::current_exception();
            return;
          }
        }
      };
      if (workers == 1) {
        work();
      } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& th : pool) th.join();
      }
      if (err) std::rethrow_exception(err);
      for (ReplicationRecord& rec : cell) out.records.push_back(std::move(rec));
    }
  }
  out.metrics = aggregate(spec, out.records, true_beta);
  return out;
}

MetricsTable aggregate(const GridSpec& spec, const std::vector<ReplicationRecord>& records,
                       double true_beta) {
  MetricsTable table;
  table.setting = spec.setting;
  table.outcome = spec.outcome;
  table.replications = spec.replications;
  table.true_beta = true_beta;

  for (std::int64_t n : spec.ns) {
    for (SelectionMethod method : spec.methods) {
      const std::string method_name = to_string(method);
      std::vector<const ReplicationRecord*> cell;
      for (const ReplicationRecord& rec : records) {
        if (rec.n == n && rec.method == method_name) cell.push_back(&rec);
      }
      for (const char* key_cstr : kAllSetKeys) {
        const std::string key = key_cstr;
        MetricsRow row;
        row.n = n;
        row.method = method_name;
        row.set = key;

        std::vector<double> cards;
        std::vector<const EstimatorOutcome*> psm, tmle;
        int unconf = 0, superset = 0, equal = 0;
        for (const ReplicationRecord* rec : cell) {
          const SetRecord* sr = find_set(*rec, key);
          if (sr == nullptr) {
            throw DataFormatError("replication record is missing set '" + key + "'");
          }
          cards.push_back(static_cast<double>(sr->selected.size()));
          unconf += sr->flags.unconfounded ? 1 : 0;
          superset += sr->flags.superset ? 1 : 0;
          equal += sr->flags.equal ? 1 : 0;
          psm.push_back(&sr->psm);
          tmle.push_back(&sr->tmle);
        }
        const double r = static_cast<double>(cell.size());
        row.unconf_pct = 100.0 * unconf / r;
        row.superset_pct = 100.0 * superset / r;
        row.equal_pct = 100.0 * equal / r;
        std::sort(cards.begin(), cards.end());
        const std::size_t mid = cards.size() / 2;
        row.card_median = cards.size() % 2 == 1 ? cards[mid]
                                                : 0.5 * (cards[mid - 1] + cards[mid]);
        row.psm = fold_estimator(psm, true_beta);
        row.tmle = fold_estimator(tmle, true_beta);
        table.rows.push_back(std::move(row));
      }
    }
  }
  return table;
}

void write_metrics_csv(const MetricsTable& table, const std::string& path,
                       const Provenance& provenance) {
  std::ofstream out(path);
  if (!out) throw DataFormatError("cannot open '" + path + "' for writing");
  out << "# setting=" << table.setting << "\n";
  out << "# outcome=" << to_string(table.outcome) << "\n";
  out << "# replications=" << table.replications << "\n";
  out << "# true_beta=" << fmt(table.true_beta) << "\n";
  write_provenance(out, provenance);
  out << "n,method,set,Yt_perp_T,S_subset,S_equal,card_median";
  for (const char* est : {"psm", "tmle"}) {
    for (const char* stat : {"bias", "sd", "mse", "cp", "ciw", "cil", "ciu", "used", "failures"}) {
      out << "," << est << "_" << stat;
    }
  }
  out << "\n";
  for (const MetricsRow& row : table.rows) {
    out << row.n << "," << row.method << "," << row.set << "," << fmt(row.unconf_pct) << ","
        << fmt(row.superset_pct) << "," << fmt(row.equal_pct) << "," << fmt(row.card_median);
    for (const EstimatorMetrics* m : {&row.psm, &row.tmle}) {
      out << "," << fmt(m->bias) << "," << fmt(m->sd) << "," << fmt(m->mse) << ","
          << fmt(m->cp) << "," << fmt(m->ciw) << "," << fmt(m->cil) << "," << fmt(m->ciu)
          << "," << m->used << "," << m->failures;
    }
    out << "\n";
  }
}

void write_raw_csv(const std::vector<ReplicationRecord>& records, const std::string& path,
                   const Provenance& provenance) {
  std::ofstream out(path);
  if (!out) throw DataFormatError("cannot open '" + path + "' for writing");
  write_provenance(out, provenance);
  // Wall time is deliberately not persisted: identical invocations must
  // produce byte-identical files.
  out << "n,method,replication,seed,set,selected,cardinality,unconf,superset,equal"
         ",psm_status,psm_beta,psm_se,psm_cil,psm_ciu,psm_nused"
         ",tmle_status,tmle_beta,tmle_se,tmle_cil,tmle_ciu,tmle_nused,tmle_flres\n";
  for (const ReplicationRecord& rec : records) {
    for (const SetRecord& sr : rec.sets) {
      out << rec.n << "," << rec.method << "," << rec.replication << "," << fmt_u64(rec.seed)
          << "," << sr.key << "," << join(sr.selected, '|') << ","
          << sr.selected.size() << "," << (sr.flags.unconfounded ? 1 : 0) << ","
          << (sr.flags.superset ? 1 : 0) << "," << (sr.flags.equal ? 1 : 0);
      for (const EstimatorOutcome* o : {&sr.psm, &sr.tmle}) {
        const char* status = !o->attempted ? "skipped" : (o->failed ? "failed" : "ok");
        const AceEstimate& e = o->estimate;
        out << "," << status << "," << fmt(e.beta_hat) << "," << fmt(e.se) << ","
            << fmt(e.ci_low) << "," << fmt(e.ci_high) << "," << e.n_used;
      }
      out << "," << fmt(sr.tmle.estimate.fluctuation_residual);
      out << "\n";
    }
  }
}

std::vector<ReplicationRecord> read_raw_csv(const std::string& path,
                                            std::map<std::string, std::string>* header) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("cannot open '" + path + "'");
  std::string line;
  bool saw_columns = false;
  std::vector<ReplicationRecord> records;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (header != nullptr) {
        const std::string body = line.substr(line.find_first_not_of("# "));
        const std::size_t eq = body.find('=');
        if (eq != std::string::npos) (*header)[body.substr(0, eq)] = body.substr(eq + 1);
      }
      continue;
    }
    if (!saw_columns) {  // column header row
      saw_columns = true;
      continue;
    }
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 23) {
      throw DataFormatError("replication row has " + std::to_string(f.size()) +
                            " fields, expected 23");
    }
    const std::int64_t n = parse_int(f[0]);
    const int replication = static_cast<int>(parse_int(f[2]));
    if (records.empty() || records.back().n != n || records.back().method != f[1] ||
        records.back().replication != replication) {
      ReplicationRecord rec;
      rec.n = n;
      rec.method = f[1];
      rec.replication = replication;
      rec.seed = parse_u64(f[3]);
      records.push_back(std::move(rec));
    }
    SetRecord sr;
    sr.key = f[4];
    if (!f[5].empty()) sr.selected = split(f[5], '|');
    sr.flags.unconfounded = parse_int(f[7]) != 0;
    sr.flags.superset = parse_int(f[8]) != 0;
    sr.flags.equal = parse_int(f[9]) != 0;
    EstimatorOutcome* outs[2] = {&sr.psm, &sr.tmle};
    const char* names[2] = {"psm", "tmle"};
    for (int k = 0; k < 2; ++k) {
      const std::size_t base = 10 + static_cast<std::size_t>(k) * 6;
      EstimatorOutcome& o = *outs[k];
      const std::string& status = f[base];
      o.attempted = status != "skipped";
      o.failed = status == "failed";
      o.estimate.estimator = names[k];
      o.estimate.beta_hat = parse_double(f[base + 1]);
      o.estimate.se = parse_double(f[base + 2]);
      o.estimate.ci_low = parse_double(f[base + 3]);
      o.estimate.ci_high = parse_double(f[base + 4]);
      o.estimate.n_used = parse_int(f[base + 5]);
    }
    sr.tmle.estimate.fluctuation_residual = parse_double(f[22]);
    records.back().sets.push_back(std::move(sr));
  }
  return records;
}

void write_summary_md(const MetricsTable& table, const std::string& path,
                      const Provenance& provenance) {
  std::ofstream out(path);
  if (!out) throw DataFormatError("cannot open '" + path + "' for writing");
  char buf[64];
  auto g4 = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return std::string(buf);
  };
  out << "# Replication summary\n\n";
  out << "- setting: " << table.setting << "\n";
  out << "- outcome: " << to_string(table.outcome) << "\n";
  out << "- replications: " << table.replications << "\n";
  out << "- true effect: " << g4(table.true_beta) << "\n";
  for (const auto& [k, v] : provenance) out << "- " << k << ": " << v << "\n";

  std::string group;
  for (const MetricsRow& row : table.rows) {
    const std::string this_group = "n = " + std::to_string(row.n) + ", method = " + row.method;
    if (this_group != group) {
      group = this_group;
      out << "\n## " << group << "\n\n";
      out << "| set | unconf % | superset % | equal % | median #S |"
             " psm bias | psm sd | psm mse | psm cp | psm ciw | psm fail |"
             " tmle bias | tmle sd | tmle mse | tmle cp | tmle ciw | tmle fail |\n";
      out << "|---|---|---|---|---|---|---|---|---|---|---|---|---|---|---|---|---|\n";
    }
    out << "| " << row.set << " | " << g4(row.unconf_pct) << " | " << g4(row.superset_pct)
        << " | " << g4(row.equal_pct) << " | " << g4(row.card_median) << " |";
    for (const EstimatorMetrics* m : {&row.psm, &row.tmle}) {
      out << " " << g4(m->bias) << " | " << g4(m->sd) << " | " << g4(m->mse) << " | "
          << g4(m->cp) << " | " << g4(m->ciw) << " | " << m->failures << " |";
    }
    out << "\n";
  }
}

}  // namespace confsel
