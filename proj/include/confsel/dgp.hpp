#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "confsel/dataset.hpp"

namespace confsel {

enum class OutcomeKind { linear, binary, nonlinear };

OutcomeKind outcome_from_string(const std::string& s);
std::string to_string(OutcomeKind k);

struct SimConfig {
  int setting = 1;  // 1: unconfoundedness holds given X; 2: adds latent confounders
  std::int64_t n = 1000;
  OutcomeKind outcome = OutcomeKind::linear;
  std::uint64_t seed = 1;
  // Total covariate count, 10..100. The first ten form the causal core; the
  // rest are correlated-within-block noise. Draws are addressed per purpose,
  // so shrinking p_total never changes the columns that remain.
  int p_total = 100;
  // Adds bookkeeping columns (_Y0, _Y1 and, in setting 2, _U1.._U3) that the
  // selection pipeline ignores by the underscore prefix.
  bool emit_audit_columns = false;
};

// Draws a dataset with columns T, Y, X1..Xp (+ audit columns). T is tagged
// as treatment, Y as outcome. Binary columns are factors, the rest
// continuous. Throws ConfigError on invalid knobs.
RawDataset simulate(const SimConfig& cfg);

// Seed for replication r of a batch, mixed so that per-replication streams
// are disjoint for any base seed.
std::uint64_t replication_seed(std::uint64_t seed, int replication);

// Population average causal effect implied by the configuration: exact (2.0)
// for the linear outcome, otherwise a Monte Carlo integral over the covariate
// law under a fixed internal seed, so every caller sees the same reference
// value. Noise terms cancel analytically and are not drawn.
double true_ace(const SimConfig& cfg, std::int64_t mc_n = 10'000'000);

struct SuccessFlags {
  bool unconfounded = false;  // the selection blocks every backdoor path
  bool superset = false;      // contains the population target set
  bool equal = false;         // matches the population target set exactly
};

// Scores a selected covariate set (by name) for one simulation setting.
// Setting 1 requires {X1, X2} plus at least one of {X7, X8}; setting 2
// additionally requires X4 and rejects any set containing the collider X9.
// `truth` is the population target set used for the superset/equal flags.
SuccessFlags check_success(int setting, const std::vector<std::string>& selected,
                           const std::vector<std::string>& truth);

}  // namespace confsel
