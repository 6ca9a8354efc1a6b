#pragma once

#include <cstdint>
#include <vector>

#include "confsel/dataset.hpp"

namespace confsel {

// Survival function of the chi-squared distribution (regularized upper
// incomplete gamma). df = 0 returns 1. Absolute error below 1e-10.
double chi2_sf(double x, std::int64_t df);

// Estimated conditional mutual information of (i, j) given the conditioning
// columns, in nats, together with the adjusted degrees of freedom:
//   mi = n^-1 sum_abc n_abc * ln(n_abc * n_c / (n_ac * n_bc))
//   df = sum over realized configs of (A_c - 1)(B_c - 1),
// where A_c, B_c count the levels of i and j observed within config c.
// Zero cells contribute nothing (0 * ln 0 = 0).
struct MiResult {
  double mi_hat = 0.0;
  std::int64_t df = 0;
};
MiResult mi_statistic(const ContingencyTable& table);

struct CiTestConfig {
  double alpha = 0.05;
  // Declares independence outright when n < 5 * (nominal cell count), the
  // usual reliability heuristic in constraint-based learning.
  bool size_guard = true;
};

struct CiTestResult {
  double mi_hat = 0.0;
  double g2 = 0.0;  // 2 * n * mi_hat
  std::int64_t df = 0;
  double p_value = 1.0;
  bool independent = true;
  bool guarded = false;  // verdict came from the sample-size guard
};

CiTestResult ci_test(const DiscreteDataset& data, int i, int j,
                     const std::vector<int>& cond, const CiTestConfig& cfg);

// Verdict-only interface shared by the empirical test and the d-separation
// oracle, so structure learning is agnostic to the independence source.
struct CiOracle {
  virtual ~CiOracle() = default;
  virtual bool independent(int i, int j, const std::vector<int>& cond) const = 0;
};

class MiCiOracle final : public CiOracle {
 public:
  MiCiOracle(const DiscreteDataset& data, CiTestConfig cfg) : data_(&data), cfg_(cfg) {}
  bool independent(int i, int j, const std::vector<int>& cond) const override {
    return ci_test(*data_, i, j, cond, cfg_).independent;
  }

 private:
  const DiscreteDataset* data_;
  CiTestConfig cfg_;
};

}  // namespace confsel
