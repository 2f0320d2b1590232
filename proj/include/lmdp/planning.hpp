#pragma once

#include <vector>

#include "lmdp/bonus.hpp"
#include "lmdp/env.hpp"
#include "lmdp/psr.hpp"

namespace lmdp {

struct PlannerOptions {
  double budget = 1e7;  // node expansions
  HistoryAccess access = HistoryAccess::kFull;
};

struct PlanResult {
  BlindPolicy policy;
  double value = 0.0;
  double nodes = 0.0;
};

struct InformedPlanResult {
  InformedPolicy policy;
  double value = 0.0;
  std::vector<double> per_symbol;  // P(iota) V(iota)
};

/**
 * Optimal blind policy by backward induction with memoization on
 * (t, s_t, posterior over contexts). Posteriors are keyed after rounding to
 * 1e-12. Ties go to the lowest action index.
 */
PlanResult plan_blind_optimal(const LmdpPsi& model, const PlannerOptions& opts = {});

/// Same planner started from arbitrary unnormalized context weights.
PlanResult plan_from_weights(const LmdpPsi& model, std::span<const double> weights,
                             const PlannerOptions& opts = {});

/// Optimal policy given iota; value is sum_iota P(iota) V(iota).
InformedPlanResult plan_informed_optimal(const LmdpPsi& model, const PlannerOptions& opts = {});

struct BonusSpec {
  const LmdpPsi& model;          // theta^k
  const PsrOperators& ops;       // operators of theta^k
  const BonusAccumulator& bonus;
};

/// Largest raw history tree the bonus planner will walk.
constexpr double kBonusTreeBudget = 1e6;

/// Exact maximizer of the expected cumulative bonus over blind policies.
PlanResult plan_bonus_optimal(const BonusSpec& spec, double budget = kBonusTreeBudget);

enum class PolicyClass { kBlind, kInformed };
enum class Objective { kValue, kBonus };

struct OracleResult {
  InformedPolicy policy;
  double value = 0.0;
  double policies_checked = 0.0;
};

/**
 * Exhaustive search over deterministic policies. Each candidate only assigns
 * actions to prefixes it reaches itself; candidates are visited in
 * lexicographic order of their choice sequence and the first maximizer wins.
 */
OracleResult enumerate_policies_oracle(const LmdpPsi& model, PolicyClass cls, Objective objective,
                                       const BonusSpec* bonus = nullptr,
                                       double max_policies = 1e6,
                                       HistoryAccess access = HistoryAccess::kFull);

/// Expected cumulative bonus of a blind policy under theta^k.
double evaluate_bonus(const BonusSpec& spec, const BlindPolicy& policy,
                      double budget = kBonusTreeBudget);

double evaluate_policy(const LmdpPsi& model, const InformedPolicy& policy, Objective objective,
                       const BonusSpec* bonus = nullptr, double budget = 1e7);

}  // namespace lmdp
