#include "confsel/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace confsel {

namespace {

constexpr double kZ95 = 1.96;
constexpr double kIrlsTol = 1e-10;
constexpr int kIrlsMaxIter = 50;
constexpr double kRidge = 1e-8;
constexpr double kSeparationScale = 15.0;
constexpr double kProbFloor = 1e-12;  // keeps logit finite on fitted values

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

void validate_roles(const RawDataset& data, const std::vector<int>& s) {
  if (data.treatment < 0 || data.outcome < 0) {
    throw ConfigError("estimation needs tagged treatment and outcome columns");
  }
  const int p = static_cast<int>(data.columns.size());
  for (int c : s) {
    if (c < 0 || c >= p) throw ConfigError("conditioning column index out of range");
    if (c == data.treatment || c == data.outcome) {
      throw ConfigError("conditioning set may not contain a role column");
    }
  }
  for (double v : data.columns[data.treatment].values) {
    if (v != 0.0 && v != 1.0) {
      throw DataFormatError("treatment column must be coded 0/1");
    }
  }
}

struct DesignSchema {
  std::vector<int> regressors;
  std::vector<int> levels;  // 0 = continuous
  int width = 1;            // including the intercept
};

DesignSchema make_schema(const RawDataset& data, const std::vector<int>& regressors) {
  DesignSchema s;
  s.regressors = regressors;
  for (int c : regressors) {
    const RawColumn& col = data.columns[c];
    if (col.kind == ColumnKind::factor) {
      int max_code = 0;
      for (double v : col.values) max_code = std::max(max_code, static_cast<int>(v));
      s.levels.push_back(max_code + 1);
      s.width += max_code;  // (levels - 1) indicator columns
    } else {
      s.levels.push_back(0);
      s.width += 1;
    }
  }
  return s;
}

void fill_row(const DesignSchema& s, const RawDataset& data, std::int64_t i,
              int override_col, double override_val, double* x) {
  x[0] = 1.0;
  int pos = 1;
  for (std::size_t k = 0; k < s.regressors.size(); ++k) {
    const int c = s.regressors[k];
    const double v = c == override_col ? override_val : data.columns[c].values[i];
    if (s.levels[k] == 0) {
      x[pos++] = v;
    } else {
      for (int level = 1; level < s.levels[k]; ++level) {
        x[pos++] = v == static_cast<double>(level) ? 1.0 : 0.0;
      }
    }
  }
}

// Solves A b = rhs for symmetric positive-definite A (row-major, w x w),
// overwriting both; returns the solution in rhs.
void chol_solve(std::vector<double>& a, std::vector<double>& rhs, int w) {
  for (int j = 0; j < w; ++j) {
    double d = a[j * w + j];
    for (int k = 0; k < j; ++k) d -= a[j * w + k] * a[j * w + k];
    if (!(d > 0.0)) throw EstimationError("normal equations are not positive definite");
    d = std::sqrt(d);
    a[j * w + j] = d;
    for (int i = j + 1; i < w; ++i) {
      double sum = a[i * w + j];
      for (int k = 0; k < j; ++k) sum -= a[i * w + k] * a[j * w + k];
      a[i * w + j] = sum / d;
    }
  }
  for (int i = 0; i < w; ++i) {  // forward: L y = rhs
    double sum = rhs[i];
    for (int k = 0; k < i; ++k) sum -= a[i * w + k] * rhs[k];
    rhs[i] = sum / a[i * w + i];
  }
  for (int i = w - 1; i >= 0; --i) {  // backward: L' x = y
    double sum = rhs[i];
    for (int k = i + 1; k < w; ++k) sum -= a[k * w + i] * rhs[k];
    rhs[i] = sum / a[i * w + i];
  }
}

std::vector<double> predict_impl(const LogisticModel& m, const RawDataset& data,
                                 int override_col, double override_val) {
  DesignSchema s;
  s.regressors = m.regressors;
  s.levels = m.levels;
  for (int lv : m.levels) s.width += lv == 0 ? 1 : lv - 1;
  if (static_cast<std::size_t>(s.width) != m.coef.size()) {
    throw EstimationError("model coefficient vector does not match its schema");
  }
  std::vector<double> x(s.width);
  std::vector<double> out(static_cast<std::size_t>(data.n));
  for (std::int64_t i = 0; i < data.n; ++i) {
    fill_row(s, data, i, override_col, override_val, x.data());
    double eta = 0.0;
    for (int k = 0; k < s.width; ++k) eta += x[k] * m.coef[k];
    out[i] = logistic(eta);
  }
  return out;
}

AceEstimate finish(AceEstimate e) {
  e.ci_low = e.beta_hat - kZ95 * e.se;
  e.ci_high = e.beta_hat + kZ95 * e.se;
  return e;
}

// ---- matching machinery ---------------------------------------------------

// Units of one arm collapsed by exact score value, ascending. Tie sets in
// nearest-neighbor queries are unions of whole groups, so per-member match
// weights can be accumulated per group.
struct ArmGroups {
  std::vector<double> score;
  std::vector<double> sum_y;
  std::vector<int> count;
  std::vector<double> add_w;   // per-member fractional usage, accumulated
  std::vector<double> add_w2;  // per-member squared usage
};

struct Nearest {
  int a = -1;
  int b = -1;  // second group on an exact distance tie
  double dist = std::numeric_limits<double>::infinity();
};

// Group(s) at minimal |s - score| in ascending distinct scores; `skip`
// removes the unit's own group when searching its own arm.
Nearest nearest_groups(const std::vector<double>& score, double s, int skip) {
  const int m = static_cast<int>(score.size());
  int right = static_cast<int>(std::lower_bound(score.begin(), score.end(), s) - score.begin());
  int left = right - 1;
  if (right == skip) ++right;
  if (left == skip) --left;
  const double dl = left >= 0 ? s - score[left] : std::numeric_limits<double>::infinity();
  const double dr = right < m ? score[right] - s : std::numeric_limits<double>::infinity();
  Nearest hit;
  if (dl < dr) {
    hit.a = left;
    hit.dist = dl;
  } else if (dr < dl) {
    hit.a = right;
    hit.dist = dr;
  } else if (left >= 0) {  // exact tie on both sides
    hit.a = left;
    hit.b = right;
    hit.dist = dl;
  }
  return hit;
}

AceEstimate diff_in_means(const std::vector<int>& t, const std::vector<double>& y) {
  double sum[2] = {0.0, 0.0};
  std::int64_t cnt[2] = {0, 0};
  for (std::size_t i = 0; i < y.size(); ++i) {
    sum[t[i]] += y[i];
    ++cnt[t[i]];
  }
  const double mean0 = sum[0] / static_cast<double>(cnt[0]);
  const double mean1 = sum[1] / static_cast<double>(cnt[1]);
  double ss[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - (t[i] == 1 ? mean1 : mean0);
    ss[t[i]] += d * d;
  }
  const double var0 = ss[0] / static_cast<double>(cnt[0] - 1);
  const double var1 = ss[1] / static_cast<double>(cnt[1] - 1);
  AceEstimate e;
  e.beta_hat = mean1 - mean0;
  e.se = std::sqrt(var1 / static_cast<double>(cnt[1]) + var0 / static_cast<double>(cnt[0]));
  e.estimator = "psm";
  e.n_used = static_cast<std::int64_t>(y.size());
  return finish(e);
}

}  // namespace

LogisticModel fit_logistic(const RawDataset& data, const std::vector<double>& response,
                           const std::vector<int>& regressors) {
  if (static_cast<std::int64_t>(response.size()) != data.n) {
    throw ConfigError("response length does not match the dataset");
  }
  for (double v : response) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw EstimationError("logistic response must lie in [0, 1]");
    }
  }
  const DesignSchema schema = make_schema(data, regressors);
  const int w = schema.width;

  LogisticModel m;
  m.regressors = schema.regressors;
  m.levels = schema.levels;
  m.coef.assign(w, 0.0);

  std::vector<double> x(w), a(static_cast<std::size_t>(w) * w), rhs(w);
  double prev_ll = -std::numeric_limits<double>::infinity();

  for (int iter = 0;; ++iter) {
    double ll = 0.0;
    std::fill(a.begin(), a.end(), 0.0);
    std::fill(rhs.begin(), rhs.end(), 0.0);
    for (std::int64_t i = 0; i < data.n; ++i) {
      fill_row(schema, data, i, -1, 0.0, x.data());
      double eta = 0.0;
      for (int k = 0; k < w; ++k) eta += x[k] * m.coef[k];
      const double mu = logistic(eta);
      ll += response[i] * eta - softplus(eta);
      const double wgt = mu * (1.0 - mu);
      const double resid = response[i] - mu;
      for (int r = 0; r < w; ++r) {
        rhs[r] += x[r] * (wgt * eta + resid);
        for (int c = 0; c <= r; ++c) a[r * w + c] += wgt * x[r] * x[c];
      }
    }
    if (!std::isfinite(ll)) throw EstimationError("logistic likelihood diverged");
    m.loglik = ll;
    if (iter > 0 && std::fabs(ll - prev_ll) <= kIrlsTol * (std::fabs(prev_ll) + 1.0)) {
      m.converged = true;
      break;
    }
    if (iter == kIrlsMaxIter) break;
    prev_ll = ll;

    for (int r = 0; r < w; ++r) {
      for (int c = r + 1; c < w; ++c) a[r * w + c] = a[c * w + r];
    }
    for (int k = 0; k < w; ++k) a[k * w + k] += kRidge;
    chol_solve(a, rhs, w);
    m.coef = rhs;
    m.iterations = iter + 1;
  }

  double biggest = 0.0;
  for (double c : m.coef) biggest = std::max(biggest, std::fabs(c));
  m.separated = !m.converged && biggest > kSeparationScale;
  return m;
}

std::vector<double> predict(const LogisticModel& m, const RawDataset& data) {
  return predict_impl(m, data, -1, 0.0);
}

std::vector<double> predict_with(const LogisticModel& m, const RawDataset& data,
                                 int column, double value) {
  return predict_impl(m, data, column, value);
}

std::vector<double> propensity_scores(const RawDataset& data, const std::vector<int>& s,
                                      LogisticModel* model_out) {
  validate_roles(data, s);
  const std::vector<double>& t = data.columns[data.treatment].values;
  LogisticModel m = fit_logistic(data, t, s);
  std::vector<double> scores = predict(m, data);
  if (model_out != nullptr) *model_out = std::move(m);
  return scores;
}

AceEstimate psm_ace(const RawDataset& data, const std::vector<int>& s, const PsmConfig& cfg) {
  validate_roles(data, s);
  const std::int64_t n = data.n;
  std::vector<int> t(static_cast<std::size_t>(n));
  std::int64_t arm_n[2] = {0, 0};
  for (std::int64_t i = 0; i < n; ++i) {
    t[i] = data.columns[data.treatment].values[i] == 1.0 ? 1 : 0;
    ++arm_n[t[i]];
  }
  if (arm_n[0] < 2 || arm_n[1] < 2) {
    throw EstimationError("matching needs at least two units in each arm");
  }
  const std::vector<double>& y = data.columns[data.outcome].values;

  std::vector<double> scores = propensity_scores(data, s);
  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  if (s.empty() || *lo_it == *hi_it) return diff_in_means(t, y);

  // Collapse each arm to distinct score values.
  ArmGroups arm[2];
  std::vector<int> group_of(static_cast<std::size_t>(n), -1);
  for (int a = 0; a < 2; ++a) {
    std::vector<std::int64_t> units;
    units.reserve(static_cast<std::size_t>(arm_n[a]));
    for (std::int64_t i = 0; i < n; ++i) {
      if (t[i] == a) units.push_back(i);
    }
    std::sort(units.begin(), units.end(), [&](std::int64_t u, std::int64_t v) {
      return scores[u] < scores[v];
    });
    ArmGroups& g = arm[a];
    for (std::int64_t u : units) {
      if (g.score.empty() || g.score.back() != scores[u]) {
        g.score.push_back(scores[u]);
        g.sum_y.push_back(0.0);
        g.count.push_back(0);
      }
      g.sum_y.back() += y[u];
      g.count.back() += 1;
      group_of[u] = static_cast<int>(g.score.size()) - 1;
    }
    g.add_w.assign(g.score.size(), 0.0);
    g.add_w2.assign(g.score.size(), 0.0);
  }

  // Match every unit against the opposite arm; exact-distance ties share the
  // match with equal weight.
  std::vector<double> tau(static_cast<std::size_t>(n), 0.0);
  std::vector<char> kept(static_cast<std::size_t>(n), 1);
  std::int64_t n_kept = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    ArmGroups& opp = arm[1 - t[i]];
    const Nearest hit = nearest_groups(opp.score, scores[i], -1);
    if (cfg.caliper > 0.0 && hit.dist > cfg.caliper) {
      kept[i] = 0;
      continue;
    }
    double msum = opp.sum_y[hit.a];
    int mcnt = opp.count[hit.a];
    if (hit.b >= 0) {
      msum += opp.sum_y[hit.b];
      mcnt += opp.count[hit.b];
    }
    const double imputed = msum / static_cast<double>(mcnt);
    tau[i] = t[i] == 1 ? y[i] - imputed : imputed - y[i];
    ++n_kept;
    const double share = 1.0 / static_cast<double>(mcnt);
    opp.add_w[hit.a] += share;
    opp.add_w2[hit.a] += share * share;
    if (hit.b >= 0) {
      opp.add_w[hit.b] += share;
      opp.add_w2[hit.b] += share * share;
    }
  }
  if (n_kept == 0) throw EstimationError("caliper left no matched units");

  double tau_bar = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (kept[i]) tau_bar += tau[i];
  }
  tau_bar /= static_cast<double>(n_kept);

  // Local outcome variance from the nearest same-arm neighbors (all of them
  // on an exact tie), shrunk by m/(m+1).
  double spread = 0.0, correction = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (kept[i]) {
      const double d = tau[i] - tau_bar;
      spread += d * d;
    }
    const ArmGroups& own = arm[t[i]];
    const int gid = group_of[i];
    const double w_i = own.add_w[gid];
    const double w2_i = own.add_w2[gid];
    const double own_term = kept[i] ? 1.0 : 0.0;
    const double coef = (own_term + w_i) * (own_term + w_i) - own_term - w2_i;
    if (coef <= 0.0) continue;

    double msum;
    int mcnt;
    if (own.count[gid] > 1) {
      msum = own.sum_y[gid] - y[i];
      mcnt = own.count[gid] - 1;
    } else {
      const Nearest hit = nearest_groups(own.score, scores[i], gid);
      msum = own.sum_y[hit.a];
      mcnt = own.count[hit.a];
      if (hit.b >= 0) {
        msum += own.sum_y[hit.b];
        mcnt += own.count[hit.b];
      }
    }
    const double mean = msum / static_cast<double>(mcnt);
    const double dev = y[i] - mean;
    const double m_over = static_cast<double>(mcnt) / static_cast<double>(mcnt + 1);
    correction += coef * m_over * dev * dev;
  }

  AceEstimate e;
  e.beta_hat = tau_bar;
  e.se = std::sqrt((spread + correction) /
                   (static_cast<double>(n_kept) * static_cast<double>(n_kept)));
  e.estimator = "psm";
  e.n_used = n_kept;
  return finish(e);
}

AceEstimate tmle_ace(const RawDataset& data, const std::vector<int>& s, const TmleConfig& cfg) {
  validate_roles(data, s);
  if (!(cfg.g_bound > 0.0 && cfg.g_bound < 0.5)) {
    throw ConfigError("propensity truncation bound must lie in (0, 0.5)");
  }
  const std::int64_t n = data.n;
  std::vector<int> t(static_cast<std::size_t>(n));
  std::int64_t arm_n[2] = {0, 0};
  for (std::int64_t i = 0; i < n; ++i) {
    t[i] = data.columns[data.treatment].values[i] == 1.0 ? 1 : 0;
    ++arm_n[t[i]];
  }
  if (arm_n[0] == 0 || arm_n[1] == 0) {
    throw EstimationError("targeted estimation needs units in both arms");
  }

  // Range-scale the outcome to [0, 1]; binary outcomes pass through.
  const RawColumn& ycol = data.columns[data.outcome];
  double lo = 0.0, range = 1.0;
  if (ycol.kind == ColumnKind::factor) {
    for (double v : ycol.values) {
      if (v != 0.0 && v != 1.0) {
        throw DataFormatError("binary outcome must be coded 0/1");
      }
    }
  } else {
    const auto [mn, mx] = std::minmax_element(ycol.values.begin(), ycol.values.end());
    lo = *mn;
    range = *mx - *mn;
    if (range == 0.0) {  // constant outcome: the effect is exactly zero
      AceEstimate e;
      e.estimator = "tmle";
      e.n_used = n;
      return finish(e);
    }
  }
  std::vector<double> ys(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) ys[i] = (ycol.values[i] - lo) / range;

  std::vector<int> q_regressors;
  q_regressors.push_back(data.treatment);
  q_regressors.insert(q_regressors.end(), s.begin(), s.end());
  const LogisticModel qm = fit_logistic(data, ys, q_regressors);
  std::vector<double> q1 = predict_with(qm, data, data.treatment, 1.0);
  std::vector<double> q0 = predict_with(qm, data, data.treatment, 0.0);

  std::vector<double> g = propensity_scores(data, s);
  for (double& v : g) v = std::clamp(v, cfg.g_bound, 1.0 - cfg.g_bound);

  auto clip = [](double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); };
  std::vector<double> off(static_cast<std::size_t>(n)), h(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const double q_obs = t[i] == 1 ? q1[i] : q0[i];
    off[i] = logit(clip(q_obs));
    h[i] = t[i] == 1 ? 1.0 / g[i] : -1.0 / (1.0 - g[i]);
  }

  // Single fluctuation along the clever covariate, solved by Newton steps.
  double eps = 0.0;
  double score = 0.0;
  for (int iter = 0; iter <= 100; ++iter) {
    score = 0.0;
    double info = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const double mu = logistic(off[i] + eps * h[i]);
      score += h[i] * (ys[i] - mu);
      info += h[i] * h[i] * mu * (1.0 - mu);
    }
    if (std::fabs(score) <= 1e-9 * static_cast<double>(n) || info <= 0.0 || iter == 100) {
      break;  // `score` now reflects the final eps
    }
    eps += std::clamp(score / info, -10.0, 10.0);
  }

  double beta_s = 0.0;
  std::vector<double> d(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const double q1s = logistic(logit(clip(q1[i])) + eps / g[i]);
    const double q0s = logistic(logit(clip(q0[i])) - eps / (1.0 - g[i]));
    const double mu_obs = t[i] == 1 ? q1s : q0s;
    d[i] = h[i] * (ys[i] - mu_obs) + q1s - q0s;
    beta_s += q1s - q0s;
  }
  beta_s /= static_cast<double>(n);

  double d_bar = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    d[i] -= beta_s;
    d_bar += d[i];
  }
  d_bar /= static_cast<double>(n);
  double ssd = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double dev = d[i] - d_bar;
    ssd += dev * dev;
  }

  AceEstimate e;
  e.beta_hat = range * beta_s;
  e.se = range * std::sqrt(ssd) / static_cast<double>(n);
  e.estimator = "tmle";
  e.n_used = n;
  e.fluctuation_residual = score;
  return finish(e);
}

}  // namespace confsel
