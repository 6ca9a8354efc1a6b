#include "confsel/dgp.hpp"

#include <algorithm>
#include <cmath>

#include "confsel/rng.hpp"

namespace confsel {

namespace {

// Named substreams. Each keys an independent counter-based stream, addressed
// by row, so every column's draws are a pure function of (seed, stream, row).
enum Stream : std::uint64_t {
  kPairX12 = 0,    // R1 and the X2 innovation, two normals per row
  kPairX56 = 1,    // X5 and the R2 innovation, two normals per row
  kJointX78 = 2,   // one uniform per row, cut into the four (X7, X8) cells
  kX3 = 3,
  kX4 = 4,
  kX9 = 5,
  kX10 = 6,
  kLatent = 7,     // U1, U2, U3, three normals per row
  kMeasure = 8,    // nu1, nu2, two normals per row
  kTreatment = 9,  // one uniform per row
  kOutcome = 10,   // per-arm outcome noise, two draws per row
  kNuisanceBase = 16,  // plus block index, ten normals per row
};

double uniform_at(const CounterRng& r, std::uint64_t idx) {
  return static_cast<double>(r.at(idx) >> 11) * 0x1.0p-53;
}

double normal_at(const CounterRng& r, std::uint64_t idx) {
  return inv_norm_cdf((static_cast<double>(r.at(idx) >> 11) + 0.5) * 0x1.0p-53);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct CoreStreams {
  CounterRng x12, x56, x78, x3, x4, x9, x10, latent, measure;

  explicit CoreStreams(std::uint64_t seed)
      : x12(CounterRng::derive_key(seed, kPairX12)),
        x56(CounterRng::derive_key(seed, kPairX56)),
        x78(CounterRng::derive_key(seed, kJointX78)),
        x3(CounterRng::derive_key(seed, kX3)),
        x4(CounterRng::derive_key(seed, kX4)),
        x9(CounterRng::derive_key(seed, kX9)),
        x10(CounterRng::derive_key(seed, kX10)),
        latent(CounterRng::derive_key(seed, kLatent)),
        measure(CounterRng::derive_key(seed, kMeasure)) {}
};

struct CoreRow {
  double x[11] = {};  // 1-based, x[1]..x[10]
  double u1 = 0.0, u2 = 0.0, u3 = 0.0;
};

CoreRow core_row(const CoreStreams& s, int setting, std::int64_t i) {
  const std::uint64_t row = static_cast<std::uint64_t>(i);
  CoreRow r;

  // (R1, X2) standard bivariate normal with covariance 0.5; X1 thresholds R1.
  const double r1 = normal_at(s.x12, 2 * row);
  r.x[2] = 0.5 * r1 + std::sqrt(0.75) * normal_at(s.x12, 2 * row + 1);
  r.x[1] = r1 > 0.0 ? 1.0 : 0.0;

  // (X5, R2) the same way; X6 thresholds R2.
  r.x[5] = normal_at(s.x56, 2 * row);
  const double r2 = 0.5 * r.x[5] + std::sqrt(0.75) * normal_at(s.x56, 2 * row + 1);
  r.x[6] = r2 > 0.0 ? 1.0 : 0.0;

  // Bernoulli pair with unit marginals 0.5 and correlation 0.7:
  // P(1,1) = P(0,0) = 0.425, P(1,0) = P(0,1) = 0.075.
  const double u78 = uniform_at(s.x78, row);
  if (u78 < 0.425) {
    r.x[7] = 1.0;
    r.x[8] = 1.0;
  } else if (u78 < 0.85) {
    r.x[7] = 0.0;
    r.x[8] = 0.0;
  } else if (u78 < 0.925) {
    r.x[7] = 1.0;
    r.x[8] = 0.0;
  } else {
    r.x[7] = 0.0;
    r.x[8] = 1.0;
  }

  r.x[3] = uniform_at(s.x3, row) < 0.5 ? 1.0 : 0.0;
  r.x[10] = uniform_at(s.x10, row) < 0.5 ? 1.0 : 0.0;

  if (setting == 1) {
    r.x[4] = normal_at(s.x4, row);
    r.x[9] = normal_at(s.x9, row);
  } else {
    r.u1 = normal_at(s.latent, 3 * row);
    r.u2 = normal_at(s.latent, 3 * row + 1);
    r.u3 = normal_at(s.latent, 3 * row + 2);
    const double nu1 = std::sqrt(0.5) * normal_at(s.measure, 2 * row);
    const double nu2 = std::sqrt(0.5) * normal_at(s.measure, 2 * row + 1);
    r.x[4] = 0.2 + 0.8 * r.u3 + nu1;
    r.x[9] = 1.0 + 2.0 * r.u1 + 3.0 * r.u2 + nu2;
  }
  return r;
}

double f_treat(const CoreRow& r, int setting) {
  double f = 3.0 - 2.0 * r.x[1] - 2.0 * r.x[2] - 2.0 * r.x[3] - r.x[4] - 2.0 * r.x[7];
  if (setting == 2) f -= r.u1;
  return f;
}

double f_out(const CoreRow& r, int setting) {
  double f = 4.0 * r.x[1] + 2.0 * r.x[2] + 2.0 * r.x[5] + 4.0 * r.x[6] + 4.0 * r.x[8];
  if (setting == 2) f += 7.0 * r.u2 + 2.0 * r.u3;
  return f;
}

double f_nonlin(const CoreRow& r, int setting, int t) {
  const double lead = setting == 1 ? 7.0 - 4.0 * t : 7.0 - 3.0 * t;
  double f = lead * r.x[1] -
             (6.0 + 3.0 * t) * r.x[6] / (0.5 + std::pow(r.x[2] + 1.4, 2.0 + 2.0 * t)) +
             2.0 * r.x[5] * r.x[5] + 4.0 * r.x[8];
  if (setting == 2) f += 7.0 * r.u2 + 2.0 * r.u3;
  return f;
}

// Potential-outcome draw for arm t; `noise` indexes the outcome stream.
double potential_outcome(const CoreRow& r, const SimConfig& cfg, int t,
                         const CounterRng& ry, std::uint64_t noise) {
  switch (cfg.outcome) {
    case OutcomeKind::linear:
      return 2.0 + 2.0 * t + f_out(r, cfg.setting) + normal_at(ry, noise);
    case OutcomeKind::binary:
      return uniform_at(ry, noise) < logistic(2.0 + 2.0 * t - f_out(r, cfg.setting)) ? 1.0
                                                                                     : 0.0;
    case OutcomeKind::nonlinear:
      return 2.0 + 4.4 * t + f_nonlin(r, cfg.setting, t) + normal_at(ry, noise);
  }
  return 0.0;  // unreachable
}

void validate(const SimConfig& cfg) {
  if (cfg.setting != 1 && cfg.setting != 2) {
    throw ConfigError("setting must be 1 or 2");
  }
  if (cfg.n < 1) throw ConfigError("sample size must be positive");
  if (cfg.p_total < 10 || cfg.p_total > 100) {
    throw ConfigError("p_total must lie in [10, 100]");
  }
}

bool core_column_is_binary(int j) {
  return j == 1 || j == 3 || j == 6 || j == 7 || j == 8 || j == 10;
}

}  // namespace

OutcomeKind outcome_from_string(const std::string& s) {
  if (s == "linear") return OutcomeKind::linear;
  if (s == "binary") return OutcomeKind::binary;
  if (s == "nonlinear") return OutcomeKind::nonlinear;
  throw ConfigError("unknown outcome model '" + s +
                    "' (expected linear, binary or nonlinear)");
}

std::string to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::linear: return "linear";
    case OutcomeKind::binary: return "binary";
    case OutcomeKind::nonlinear: return "nonlinear";
  }
  return "linear";  // unreachable
}

std::uint64_t replication_seed(std::uint64_t seed, int replication) {
  const std::uint64_t r = static_cast<std::uint64_t>(replication);
  return CounterRng::mix(CounterRng::mix(seed) ^
                         (0x9e3779b97f4a7c15ULL * (r + 1)));
}

RawDataset simulate(const SimConfig& cfg) {
  validate(cfg);
  const bool binary_y = cfg.outcome == OutcomeKind::binary;

  RawDataset data;
  data.n = cfg.n;
  data.treatment = 0;
  data.outcome = 1;

  auto add_column = [&](const std::string& name, ColumnKind kind) {
    RawColumn c;
    c.name = name;
    c.kind = kind;
    c.values.reserve(static_cast<std::size_t>(cfg.n));
    data.columns.push_back(std::move(c));
    return static_cast<int>(data.columns.size()) - 1;
  };

  add_column("T", ColumnKind::factor);
  add_column("Y", binary_y ? ColumnKind::factor : ColumnKind::continuous);
  for (int j = 1; j <= cfg.p_total; ++j) {
    ColumnKind kind;
    if (j <= 10) {
      kind = core_column_is_binary(j) ? ColumnKind::factor : ColumnKind::continuous;
    } else {
      // Within each noise block, every other column is thresholded to binary.
      kind = (j - 11) % 2 == 1 ? ColumnKind::factor : ColumnKind::continuous;
    }
    add_column("X" + std::to_string(j), kind);
  }
  int y0_col = -1, y1_col = -1, u_col = -1;
  if (cfg.emit_audit_columns) {
    ColumnKind ykind = binary_y ? ColumnKind::factor : ColumnKind::continuous;
    y0_col = add_column("_Y0", ykind);
    y1_col = add_column("_Y1", ykind);
    if (cfg.setting == 2) {
      u_col = add_column("_U1", ColumnKind::continuous);
      add_column("_U2", ColumnKind::continuous);
      add_column("_U3", ColumnKind::continuous);
    }
  }

  const CoreStreams streams(cfg.seed);
  const CounterRng rt(CounterRng::derive_key(cfg.seed, kTreatment));
  const CounterRng ry(CounterRng::derive_key(cfg.seed, kOutcome));
  const int n_blocks = (cfg.p_total - 10 + 9) / 10;
  std::vector<CounterRng> block_rng;
  for (int b = 0; b < n_blocks; ++b) {
    block_rng.emplace_back(CounterRng::derive_key(cfg.seed, kNuisanceBase + b));
  }

  for (std::int64_t i = 0; i < cfg.n; ++i) {
    const std::uint64_t row = static_cast<std::uint64_t>(i);
    const CoreRow r = core_row(streams, cfg.setting, i);

    const double p_treat = logistic(-f_treat(r, cfg.setting));
    const int t = uniform_at(rt, row) < p_treat ? 1 : 0;
    const double y0 = potential_outcome(r, cfg, 0, ry, 2 * row);
    const double y1 = potential_outcome(r, cfg, 1, ry, 2 * row + 1);

    data.columns[0].values.push_back(t);
    data.columns[1].values.push_back(t == 1 ? y1 : y0);
    for (int j = 1; j <= 10; ++j) data.columns[1 + j].values.push_back(r.x[j]);

    for (int b = 0; b < n_blocks; ++b) {
      double w = 0.0;
      for (int k = 0; k < 10; ++k) {
        const double z = normal_at(block_rng[b], 10 * row + static_cast<std::uint64_t>(k));
        // AR(1) with lag correlation 0.3 and stationary unit variance.
        w = k == 0 ? z : 0.3 * w + std::sqrt(0.91) * z;
        const int j = 11 + 10 * b + k;
        if (j > cfg.p_total) break;
        data.columns[1 + j].values.push_back(k % 2 == 1 ? (w > 0.0 ? 1.0 : 0.0) : w);
      }
    }

    if (cfg.emit_audit_columns) {
      data.columns[y0_col].values.push_back(y0);
      data.columns[y1_col].values.push_back(y1);
      if (cfg.setting == 2) {
        data.columns[u_col].values.push_back(r.u1);
        data.columns[u_col + 1].values.push_back(r.u2);
        data.columns[u_col + 2].values.push_back(r.u3);
      }
    }
  }
  return data;
}

double true_ace(const SimConfig& cfg, std::int64_t mc_n) {
  validate(cfg);
  if (cfg.outcome == OutcomeKind::linear) return 2.0;
  if (mc_n < 1) throw ConfigError("mc_n must be positive");

  // Dedicated fixed seed: the reference value must not move with the
  // simulation seed, sample size or covariate count.
  constexpr std::uint64_t kAceSeed = 0x0ace0ace0ace0aceULL;
  const CoreStreams streams(kAceSeed);

  double acc = 0.0;
  for (std::int64_t i = 0; i < mc_n; ++i) {
    const CoreRow r = core_row(streams, cfg.setting, i);
    if (cfg.outcome == OutcomeKind::binary) {
      const double f = f_out(r, cfg.setting);
      acc += logistic(4.0 - f) - logistic(2.0 - f);
    } else {
      acc += 4.4 + f_nonlin(r, cfg.setting, 1) - f_nonlin(r, cfg.setting, 0);
    }
  }
  return acc / static_cast<double>(mc_n);
}

SuccessFlags check_success(int setting, const std::vector<std::string>& selected,
                           const std::vector<std::string>& truth) {
  if (setting != 1 && setting != 2) throw ConfigError("setting must be 1 or 2");
  auto has = [&](const char* name) {
    return std::find(selected.begin(), selected.end(), name) != selected.end();
  };

  SuccessFlags f;
  f.unconfounded = has("X1") && has("X2") && (has("X7") || has("X8"));
  if (setting == 2) {
    f.unconfounded = f.unconfounded && has("X4") && !has("X9");
  }

  std::vector<std::string> sel = selected;
  std::vector<std::string> tru = truth;
  std::sort(sel.begin(), sel.end());
  std::sort(tru.begin(), tru.end());
  f.superset = std::includes(sel.begin(), sel.end(), tru.begin(), tru.end());
  f.equal = sel == tru;
  return f;
}

}  // namespace confsel
