#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "confsel/dataset.hpp"

namespace confsel {

struct LogisticModel {
  std::vector<int> regressors;
  // Parallel to regressors: 0 marks a continuous column entered raw, a
  // positive value is the factor level count expanded to indicators with
  // level 0 as reference.
  std::vector<int> levels;
  std::vector<double> coef;  // intercept first, then terms in regressor order
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  bool separated = false;  // ran out of iterations with runaway coefficients
};

// Maximum-likelihood logistic regression via iteratively reweighted least
// squares, with a tiny ridge on the normal equations for stability. The
// response may be fractional in [0, 1] (a range-scaled outcome is a valid
// quasi-binomial response).
LogisticModel fit_logistic(const RawDataset& data, const std::vector<double>& response,
                           const std::vector<int>& regressors);

std::vector<double> predict(const LogisticModel& m, const RawDataset& data);

// Prediction with one source column replaced by a constant, e.g. the
// treatment forced to 0 or 1 for potential-outcome regressions.
std::vector<double> predict_with(const LogisticModel& m, const RawDataset& data,
                                 int column, double value);

// Main-effects propensity scores P(T = 1 | S). An empty conditioning set
// yields the constant empirical treatment share.
std::vector<double> propensity_scores(const RawDataset& data, const std::vector<int>& s,
                                      LogisticModel* model_out = nullptr);

struct AceEstimate {
  double beta_hat = 0.0;
  double se = 0.0;
  double ci_low = 0.0;   // beta_hat - 1.96 * se
  double ci_high = 0.0;  // beta_hat + 1.96 * se
  std::string estimator;
  std::int64_t n_used = 0;
  // Residual of the targeting score equation sum(H * (Y_scaled - Q*)); zero
  // up to Newton tolerance when the fluctuation converged. Unused by psm.
  double fluctuation_residual = 0.0;
};

struct PsmConfig {
  // Maximum score distance for an acceptable match; 0 disables the rule.
  // Units without an in-range match are dropped from the effect average
  // (they still serve as matches for others).
  double caliper = 0.0;
};

// Average treatment effect by nearest-neighbor propensity-score matching
// with replacement, in both directions. Exact distance ties are averaged
// with equal weight. The variance estimator is the matching form
//   n^-2 [ sum_i (tau_i - tau)^2 + sum_i ((1 + W_i)^2 - 1 - W2_i) sigma2_i ],
// where W_i is the total (fractional) weight with which unit i serves as a
// match, W2_i the corresponding sum of squared weights, and sigma2_i a
// local variance estimate from the nearest same-arm neighbors. With an
// empty conditioning set or a constant score the estimate short-circuits to
// the difference in arm means with the two-sample unequal-variance error.
AceEstimate psm_ace(const RawDataset& data, const std::vector<int>& s,
                    const PsmConfig& cfg = {});

struct TmleConfig {
  double g_bound = 0.025;  // propensity truncation to [g_bound, 1 - g_bound]
};

// Doubly robust targeted estimate: the outcome is range-scaled to [0, 1], an
// initial logistic regression of the scaled outcome on treatment and S is
// fluctuated once along the clever covariate H(t, g), and the effect is the
// rescaled mean difference of the updated potential-outcome predictions.
// The standard error comes from the empirical influence curve.
AceEstimate tmle_ace(const RawDataset& data, const std::vector<int>& s,
                     const TmleConfig& cfg = {});

}  // namespace confsel
