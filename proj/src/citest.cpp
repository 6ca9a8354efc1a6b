#include "confsel/citest.hpp"

#include <cmath>
#include <stdexcept>

namespace confsel {

namespace {

constexpr int kMaxGammaIter = 500;
constexpr double kGammaEps = 1e-16;

// Lower regularized incomplete gamma via its power series; x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < kMaxGammaIter; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kGammaEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma via Lentz continued fraction; x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxGammaIter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kGammaEps) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double chi2_sf(double x, std::int64_t df) {
  if (df < 0) throw std::invalid_argument("chi2_sf: negative df");
  if (df == 0) return 1.0;
  if (!(x > 0.0)) return 1.0;
  const double a = 0.5 * static_cast<double>(df);
  const double xh = 0.5 * x;
  return xh < a + 1.0 ? 1.0 - gamma_p_series(a, xh) : gamma_q_cf(a, xh);
}

MiResult mi_statistic(const ContingencyTable& t) {
  MiResult r;
  if (t.n == 0) return r;
  const double n = static_cast<double>(t.n);
  double acc = 0.0;
  for (std::size_t s = 0; s < t.n_configs(); ++s) {
    const auto& cell = t.cell[s];
    const auto& rm = t.row_marginal[s];
    const auto& cm = t.col_marginal[s];
    const double nc = static_cast<double>(t.config_total[s]);
    if (nc == 0.0) continue;
    int a_obs = 0;
    int b_obs = 0;
    for (int a = 0; a < t.levels_i; ++a)
      if (rm[static_cast<std::size_t>(a)] > 0) ++a_obs;
    for (int b = 0; b < t.levels_j; ++b)
      if (cm[static_cast<std::size_t>(b)] > 0) ++b_obs;
    r.df += static_cast<std::int64_t>(a_obs - 1) * (b_obs - 1);
    for (int a = 0; a < t.levels_i; ++a) {
      const double na = static_cast<double>(rm[static_cast<std::size_t>(a)]);
      if (na == 0.0) continue;
      for (int b = 0; b < t.levels_j; ++b) {
        const double nab =
            static_cast<double>(cell[static_cast<std::size_t>(a) * t.levels_j + b]);
        if (nab == 0.0) continue;
        const double nb = static_cast<double>(cm[static_cast<std::size_t>(b)]);
        acc += nab * std::log(nab * nc / (na * nb));
      }
    }
  }
  r.mi_hat = acc / n;
  return r;
}

CiTestResult ci_test(const DiscreteDataset& data, int i, int j,
                     const std::vector<int>& cond, const CiTestConfig& cfg) {
  CiTestResult out;
  if (cfg.size_guard) {
    double cells = static_cast<double>(data.columns.at(static_cast<std::size_t>(i)).n_levels) *
                   data.columns.at(static_cast<std::size_t>(j)).n_levels;
    for (int k : cond) {
      cells *= data.columns.at(static_cast<std::size_t>(k)).n_levels;
      if (cells > 1e15) break;
    }
    if (static_cast<double>(data.n) < 5.0 * cells) {
      out.guarded = true;
      return out;  // df = 0, p = 1, independent
    }
  }
  const ContingencyTable t = contingency(data, i, j, cond);
  const MiResult mi = mi_statistic(t);
  out.mi_hat = mi.mi_hat;
  out.df = mi.df;
  out.g2 = 2.0 * static_cast<double>(t.n) * mi.mi_hat;
  out.p_value = mi.df == 0 ? 1.0 : chi2_sf(out.g2, mi.df);
  out.independent = mi.df == 0 || out.p_value > cfg.alpha;
  return out;
}

}  // namespace confsel
