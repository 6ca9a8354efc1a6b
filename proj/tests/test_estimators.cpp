#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "confsel/dgp.hpp"
#include "confsel/estimators.hpp"
#include "support/reference.hpp"

using namespace confsel;

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Independent mirror of the matching estimator: per-unit O(n^2) scans with no
// group collapsing, including the variance with local same-arm spreads.
struct BrutePsm {
  double beta = 0.0;
  double se = 0.0;
  std::int64_t n_used = 0;
};

BrutePsm brute_psm(const std::vector<double>& s, const std::vector<int>& t,
                   const std::vector<double>& y, double caliper = 0.0) {
  const std::size_t n = s.size();
  std::vector<double> tau(n, 0.0), w(n, 0.0), w2(n, 0.0);
  std::vector<char> kept(n, 1);
  std::int64_t n_kept = 0;

  for (std::size_t i = 0; i < n; ++i) {
    double best = 1e300;
    for (std::size_t j = 0; j < n; ++j)
      if (t[j] != t[i]) best = std::min(best, std::fabs(s[i] - s[j]));
    if (caliper > 0.0 && best > caliper) {
      kept[i] = 0;
      continue;
    }
    std::vector<std::size_t> set;
    for (std::size_t j = 0; j < n; ++j)
      if (t[j] != t[i] && std::fabs(s[i] - s[j]) == best) set.push_back(j);
    double imputed = 0.0;
    for (std::size_t j : set) imputed += y[j];
    imputed /= static_cast<double>(set.size());
    tau[i] = t[i] == 1 ? y[i] - imputed : imputed - y[i];
    ++n_kept;
    const double share = 1.0 / static_cast<double>(set.size());
    for (std::size_t j : set) {
      w[j] += share;
      w2[j] += share * share;
    }
  }

  double tau_bar = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (kept[i]) tau_bar += tau[i];
  tau_bar /= static_cast<double>(n_kept);

  double spread = 0.0, correction = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (kept[i]) {
      const double d = tau[i] - tau_bar;
      spread += d * d;
    }
    const double own = kept[i] ? 1.0 : 0.0;
    const double coef = (own + w[i]) * (own + w[i]) - own - w2[i];
    if (coef <= 0.0) continue;

    std::vector<std::size_t> local;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && t[j] == t[i] && s[j] == s[i]) local.push_back(j);
    if (local.empty()) {
      double best = 1e300;
      for (std::size_t j = 0; j < n; ++j)
        if (t[j] == t[i] && s[j] != s[i]) best = std::min(best, std::fabs(s[i] - s[j]));
      for (std::size_t j = 0; j < n; ++j)
        if (t[j] == t[i] && s[j] != s[i] && std::fabs(s[i] - s[j]) == best)
          local.push_back(j);
    }
    double mean = 0.0;
    for (std::size_t j : local) mean += y[j];
    const double m = static_cast<double>(local.size());
    mean /= m;
    const double dev = y[i] - mean;
    correction += coef * (m / (m + 1.0)) * dev * dev;
  }

  BrutePsm out;
  out.beta = tau_bar;
  out.se = std::sqrt((spread + correction) /
                     (static_cast<double>(n_kept) * static_cast<double>(n_kept)));
  out.n_used = n_kept;
  return out;
}

RawDataset sim_draw(std::uint64_t seed, std::int64_t n, OutcomeKind k = OutcomeKind::linear) {
  SimConfig cfg;
  cfg.n = n;
  cfg.p_total = 10;
  cfg.seed = seed;
  cfg.outcome = k;
  return simulate(cfg);
}

std::vector<int> raw_cols(const RawDataset& d, const std::vector<std::string>& names) {
  std::vector<int> out;
  for (const auto& nm : names) out.push_back(d.col_index(nm));
  return out;
}

}  // namespace

TEST_CASE("saturated two-by-two fit recovers the closed-form log odds") {
  std::vector<double> xv, resp;
  auto add = [&](double x, double y, int k) {
    for (int i = 0; i < k; ++i) {
      xv.push_back(x);
      resp.push_back(y);
    }
  };
  add(0.0, 0.0, 70);
  add(0.0, 1.0, 30);
  add(1.0, 0.0, 40);
  add(1.0, 1.0, 60);
  RawDataset d = testref::make_raw({{"X", xv}});
  LogisticModel m = fit_logistic(d, resp, {0});
  REQUIRE(m.converged);
  REQUIRE(m.coef.size() == 2);
  CHECK(m.coef[0] == doctest::Approx(std::log(3.0 / 7.0)).epsilon(1e-7));
  CHECK(m.coef[1] == doctest::Approx(std::log(7.0 / 2.0)).epsilon(1e-7));
  CHECK_FALSE(m.separated);

  // Fitted cell probabilities match the empirical shares.
  std::vector<double> p = predict(m, d);
  CHECK(p[0] == doctest::Approx(0.3).epsilon(1e-7));
  CHECK(p.back() == doctest::Approx(0.6).epsilon(1e-7));
}

TEST_CASE("intercept-only fit is the empirical share with its exact likelihood") {
  std::vector<double> resp(100, 0.0);
  std::fill(resp.begin(), resp.begin() + 60, 1.0);
  std::vector<double> filler(100, 0.5);
  RawDataset d = testref::make_raw({{"Z", filler}});
  LogisticModel m = fit_logistic(d, resp, {});
  REQUIRE(m.coef.size() == 1);
  CHECK(m.coef[0] == doctest::Approx(std::log(1.5)).epsilon(1e-8));
  CHECK(m.loglik ==
        doctest::Approx(60.0 * std::log(0.6) + 40.0 * std::log(0.4)).epsilon(1e-10));
}

TEST_CASE("factor regressors expand to indicators against level zero") {
  std::vector<double> xv, resp;
  auto add = [&](double lev, int ones, int zeros) {
    for (int i = 0; i < ones; ++i) {
      xv.push_back(lev);
      resp.push_back(1.0);
    }
    for (int i = 0; i < zeros; ++i) {
      xv.push_back(lev);
      resp.push_back(0.0);
    }
  };
  add(0.0, 10, 40);
  add(1.0, 25, 25);
  add(2.0, 40, 10);
  RawDataset d = testref::make_raw({{"X", xv}});
  REQUIRE(d.columns[0].kind == ColumnKind::factor);
  LogisticModel m = fit_logistic(d, resp, {0});
  REQUIRE(m.levels == std::vector<int>{3});
  REQUIRE(m.coef.size() == 3);
  CHECK(m.coef[0] == doctest::Approx(std::log(0.25)).epsilon(1e-7));
  CHECK(m.coef[1] == doctest::Approx(std::log(4.0)).epsilon(1e-7));  // to even odds
  CHECK(m.coef[2] == doctest::Approx(std::log(16.0)).epsilon(1e-7));
}

TEST_CASE("prediction applies the linear index and honors forced columns") {
  RawDataset d = sim_draw(404, 200);
  const int x2 = d.col_index("X2");
  const int x1 = d.col_index("X1");
  const std::vector<double>& t = d.columns[static_cast<std::size_t>(d.treatment)].values;
  LogisticModel m = fit_logistic(d, t, {x1, x2});
  REQUIRE(m.converged);

  std::vector<double> p = predict(m, d);
  std::vector<double> p1 = predict_with(m, d, x1, 1.0);
  const auto& v1 = d.columns[static_cast<std::size_t>(x1)].values;
  const auto& v2 = d.columns[static_cast<std::size_t>(x2)].values;
  for (std::size_t i = 0; i < p.size(); ++i) {
    // X1 is binary (one indicator); X2 continuous.
    const double eta = m.coef[0] + m.coef[1] * v1[i] + m.coef[2] * v2[i];
    CHECK(p[i] == doctest::Approx(expit(eta)).epsilon(1e-12));
    const double eta1 = m.coef[0] + m.coef[1] * 1.0 + m.coef[2] * v2[i];
    CHECK(p1[i] == doctest::Approx(expit(eta1)).epsilon(1e-12));
  }
}

TEST_CASE("perfect separation plateaus at a degenerate but flagged-sane fit") {
  std::vector<double> xv, resp;
  for (int i = 0; i < 40; ++i) {
    const double v = -1.95 + 0.1 * i;
    xv.push_back(v);
    resp.push_back(v > 0.0 ? 1.0 : 0.0);
  }
  RawDataset d = testref::make_raw({{"X", xv}});
  LogisticModel m = fit_logistic(d, resp, {0});
  // The likelihood plateaus near zero, so the fit reports convergence with a
  // runaway slope; predictions are saturated on each side of the boundary.
  CHECK(std::fabs(m.coef[1]) > 50.0);
  std::vector<double> p = predict(m, d);
  CHECK(p.front() < 1e-6);
  CHECK(p.back() > 1.0 - 1e-6);

  std::vector<double> bad = resp;
  bad[0] = -0.25;
  CHECK_THROWS_AS(fit_logistic(d, bad, {0}), EstimationError);
}

TEST_CASE("propensity scores with no conditioning collapse to the arm share") {
  RawDataset d = sim_draw(7, 500);
  LogisticModel m;
  std::vector<double> g = propensity_scores(d, {}, &m);
  const std::vector<double>& t = d.columns[static_cast<std::size_t>(d.treatment)].values;
  const double share = std::accumulate(t.begin(), t.end(), 0.0) / 500.0;
  for (double v : g) CHECK(v == doctest::Approx(share).epsilon(1e-8));
  CHECK(m.coef.size() == 1);
}

TEST_CASE("matching with an empty set is the two-sample mean difference") {
  RawDataset d = sim_draw(21, 600);
  AceEstimate e = psm_ace(d, {});

  const std::vector<double>& t = d.columns[static_cast<std::size_t>(d.treatment)].values;
  const std::vector<double>& y = d.columns[static_cast<std::size_t>(d.outcome)].values;
  double sum[2] = {0, 0};
  std::int64_t cnt[2] = {0, 0};
  for (std::size_t i = 0; i < y.size(); ++i) {
    sum[t[i] == 1.0] += y[i];
    ++cnt[t[i] == 1.0];
  }
  const double m0 = sum[0] / cnt[0], m1 = sum[1] / cnt[1];
  double ss[2] = {0, 0};
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double dv = y[i] - (t[i] == 1.0 ? m1 : m0);
    ss[t[i] == 1.0] += dv * dv;
  }
  const double se = std::sqrt(ss[1] / (cnt[1] - 1) / cnt[1] + ss[0] / (cnt[0] - 1) / cnt[0]);

  CHECK(e.beta_hat == m1 - m0);
  CHECK(e.se == doctest::Approx(se).epsilon(1e-14));
  CHECK(e.ci_low == doctest::Approx(e.beta_hat - 1.96 * e.se).epsilon(1e-14));
  CHECK(e.ci_high == doctest::Approx(e.beta_hat + 1.96 * e.se).epsilon(1e-14));
  CHECK(e.n_used == 600);
  CHECK(e.estimator == "psm");
}

TEST_CASE("matching agrees with the per-unit mirror across draws") {
  for (std::uint64_t seed : {11ULL, 12ULL, 13ULL, 14ULL, 15ULL, 16ULL, 17ULL, 18ULL,
                             19ULL, 20ULL, 31ULL, 32ULL, 33ULL, 34ULL, 35ULL, 36ULL,
                             37ULL, 38ULL, 39ULL, 40ULL}) {
    RawDataset d = sim_draw(seed, 300);
    std::vector<int> s = raw_cols(d, {"X1", "X2", "X8"});
    std::vector<double> scores = propensity_scores(d, s);
    std::vector<int> t(static_cast<std::size_t>(d.n));
    for (std::size_t i = 0; i < t.size(); ++i)
      t[i] = d.columns[static_cast<std::size_t>(d.treatment)].values[i] == 1.0;
    const std::vector<double>& y = d.columns[static_cast<std::size_t>(d.outcome)].values;

    AceEstimate e = psm_ace(d, s);
    BrutePsm ref = brute_psm(scores, t, y);
    CHECK(e.beta_hat == doctest::Approx(ref.beta).epsilon(1e-12));
    CHECK(e.se == doctest::Approx(ref.se).epsilon(1e-10));
    CHECK(e.n_used == ref.n_used);
    CHECK(e.beta_hat ==
          doctest::Approx(testref::brute_ate_match(scores,
              d.columns[static_cast<std::size_t>(d.treatment)].values, y))
              .epsilon(1e-12));
  }
}

TEST_CASE("matching handles exact score ties by equal-weight sharing") {
  // One unbalanced binary covariate gives exactly two score values (about
  // 0.25 and 0.75), so every match hits a whole tie group at distance zero.
  std::vector<double> tv, yv, xv;
  auto add = [&](double t, double x, double y) {
    tv.push_back(t);
    xv.push_back(x);
    yv.push_back(y);
  };
  add(1, 0, 3.0);
  add(1, 1, 9.0);
  add(1, 1, 11.0);
  add(1, 1, 13.0);
  add(0, 0, 1.0);
  add(0, 0, 3.0);
  add(0, 0, 5.0);
  add(0, 1, 6.0);
  RawDataset d =
      testref::make_raw({{"T", tv}, {"Y", yv}, {"X", xv}}, "T", "Y");
  std::vector<double> scores = propensity_scores(d, {2});
  CHECK(scores[0] == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(scores[1] == doctest::Approx(0.75).epsilon(1e-6));
  std::vector<int> t = {1, 1, 1, 1, 0, 0, 0, 0};
  AceEstimate e = psm_ace(d, {2});
  BrutePsm ref = brute_psm(scores, t, yv);
  CHECK(e.beta_hat == doctest::Approx(ref.beta).epsilon(1e-12));
  CHECK(e.se == doctest::Approx(ref.se).epsilon(1e-10));
  // Hand count: imputed means 3, 6, 3, 11 give taus {0,3,5,7,2,0,-2,5}.
  CHECK(e.beta_hat == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("caliper drops out-of-range units from the average only") {
  RawDataset d = sim_draw(57, 240);
  std::vector<int> s = raw_cols(d, {"X1", "X2", "X7"});
  std::vector<double> scores = propensity_scores(d, s);
  std::vector<int> t(static_cast<std::size_t>(d.n));
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = d.columns[static_cast<std::size_t>(d.treatment)].values[i] == 1.0;
  const std::vector<double>& y = d.columns[static_cast<std::size_t>(d.outcome)].values;

  // Widest nearest-match gap over units: a caliper just under it drops
  // exactly the units at that gap.
  double widest = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    double best = 1e300;
    for (std::size_t j = 0; j < t.size(); ++j)
      if (t[j] != t[i]) best = std::min(best, std::fabs(scores[i] - scores[j]));
    widest = std::max(widest, best);
  }

  PsmConfig tight;
  tight.caliper = widest * 0.999;
  AceEstimate e = psm_ace(d, s, tight);
  BrutePsm ref = brute_psm(scores, t, y, tight.caliper);
  CHECK(e.n_used == ref.n_used);
  CHECK(e.n_used < d.n);
  CHECK(e.beta_hat == doctest::Approx(ref.beta).epsilon(1e-12));
  CHECK(e.se == doctest::Approx(ref.se).epsilon(1e-10));

  PsmConfig loose;
  loose.caliper = widest * 1.001;
  AceEstimate full = psm_ace(d, s, loose);
  AceEstimate off = psm_ace(d, s);
  CHECK(full.n_used == d.n);
  CHECK(full.beta_hat == off.beta_hat);

  PsmConfig impossible;
  impossible.caliper = 1e-15;
  CHECK_THROWS_AS(psm_ace(d, s, impossible), EstimationError);
}

TEST_CASE("targeted estimate with no conditioning matches the mean difference") {
  RawDataset d = sim_draw(88, 800);
  const std::vector<double>& t = d.columns[static_cast<std::size_t>(d.treatment)].values;
  const std::vector<double>& y = d.columns[static_cast<std::size_t>(d.outcome)].values;
  double sum[2] = {0, 0};
  std::int64_t cnt[2] = {0, 0};
  for (std::size_t i = 0; i < y.size(); ++i) {
    sum[t[i] == 1.0] += y[i];
    ++cnt[t[i] == 1.0];
  }
  const double dim = sum[1] / cnt[1] - sum[0] / cnt[0];

  AceEstimate e = tmle_ace(d, {});
  CHECK(e.estimator == "tmle");
  CHECK(e.n_used == d.n);
  CHECK(e.beta_hat == doctest::Approx(dim).epsilon(1e-5));
  CHECK(std::fabs(e.fluctuation_residual) <= 1e-6 * static_cast<double>(d.n));
}

TEST_CASE("targeting solves its score equation on realistic draws") {
  for (std::uint64_t seed : {5ULL, 6ULL, 7ULL, 8ULL}) {
    for (OutcomeKind k : {OutcomeKind::linear, OutcomeKind::binary}) {
      RawDataset d = sim_draw(seed, 900, k);
      std::vector<int> s = raw_cols(d, {"X1", "X2", "X5", "X6", "X8"});
      AceEstimate e = tmle_ace(d, s);
      CHECK(std::fabs(e.fluctuation_residual) <= 1e-6 * static_cast<double>(d.n));
      CHECK(std::isfinite(e.se));
      CHECK(e.se > 0.0);
      CHECK(e.ci_low < e.beta_hat);
      CHECK(e.beta_hat < e.ci_high);
      if (k == OutcomeKind::linear) {
        // Adjusted for the outcome parents: close to the design effect of 2.
        CHECK(e.beta_hat == doctest::Approx(2.0).epsilon(0.25));
      } else {
        CHECK(e.beta_hat > -1.0);
        CHECK(e.beta_hat < 1.0);
      }
    }
  }
}

TEST_CASE("both estimators commute with affine outcome rescaling") {
  RawDataset d = sim_draw(314, 500);
  std::vector<int> s = raw_cols(d, {"X1", "X2", "X8"});
  AceEstimate p0 = psm_ace(d, s);
  AceEstimate t0 = tmle_ace(d, s);

  RawDataset scaled = d;
  for (double& v : scaled.columns[static_cast<std::size_t>(scaled.outcome)].values)
    v = 12.5 - 3.0 * v;  // affine map with negative slope
  AceEstimate p1 = psm_ace(scaled, s);
  AceEstimate t1 = tmle_ace(scaled, s);

  CHECK(p1.beta_hat == doctest::Approx(-3.0 * p0.beta_hat).epsilon(1e-9));
  CHECK(p1.se == doctest::Approx(3.0 * p0.se).epsilon(1e-9));
  CHECK(t1.beta_hat == doctest::Approx(-3.0 * t0.beta_hat).epsilon(1e-6));
  CHECK(t1.se == doctest::Approx(3.0 * t0.se).epsilon(1e-6));
}

TEST_CASE("constant outcome short-circuits the targeted estimate to zero") {
  RawDataset d = sim_draw(9, 120);
  for (double& v : d.columns[static_cast<std::size_t>(d.outcome)].values) v = 4.25;
  AceEstimate e = tmle_ace(d, raw_cols(d, {"X1"}));
  CHECK(e.beta_hat == 0.0);
  CHECK(e.se == 0.0);
}

TEST_CASE("estimators are pure functions of the dataset") {
  RawDataset d = sim_draw(271, 350);
  std::vector<int> s = raw_cols(d, {"X1", "X2", "X7"});
  AceEstimate a = psm_ace(d, s), b = psm_ace(d, s);
  CHECK(a.beta_hat == b.beta_hat);
  CHECK(a.se == b.se);
  AceEstimate c = tmle_ace(d, s), e = tmle_ace(d, s);
  CHECK(c.beta_hat == e.beta_hat);
  CHECK(c.se == e.se);
}

TEST_CASE("invalid inputs are rejected with typed errors") {
  RawDataset d = sim_draw(64, 100);

  RawDataset all_treated = d;
  for (double& v : all_treated.columns[static_cast<std::size_t>(d.treatment)].values)
    v = 1.0;
  CHECK_THROWS_AS(psm_ace(all_treated, {}), EstimationError);
  CHECK_THROWS_AS(tmle_ace(all_treated, {}), EstimationError);

  RawDataset coded = d;
  coded.columns[static_cast<std::size_t>(d.treatment)].values[3] = 2.0;
  CHECK_THROWS_AS(psm_ace(coded, {}), DataFormatError);
  CHECK_THROWS_AS(tmle_ace(coded, {}), DataFormatError);

  CHECK_THROWS_AS(psm_ace(d, {d.treatment}), ConfigError);
  CHECK_THROWS_AS(tmle_ace(d, {d.outcome}), ConfigError);
  CHECK_THROWS_AS(psm_ace(d, {999}), ConfigError);

  RawDataset untagged = d;
  untagged.treatment = -1;
  CHECK_THROWS_AS(psm_ace(untagged, {}), ConfigError);

  TmleConfig bad_bound;
  bad_bound.g_bound = 0.6;
  CHECK_THROWS_AS(tmle_ace(d, {}, bad_bound), ConfigError);
}
