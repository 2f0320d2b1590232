#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lmdp/bonus.hpp"
#include "lmdp/env.hpp"
#include "lmdp/planning.hpp"
#include "lmdp/psr.hpp"

namespace lmdp {

struct EpisodeRecord {
  TrajectoryRecord traj;
  std::uint64_t policy_hash = 0;
};

/**
 * Append-only episode store. Alongside the raw records it keeps counts of
 * distinct (prefix s1..s_t, a_t) keys so that bonus matrices can be rebuilt
 * in time proportional to the number of distinct prefixes.
 */
class Dataset {
 public:
  void append(EpisodeRecord rec);
  std::size_t size() const { return records_.size(); }
  const std::vector<EpisodeRecord>& records() const { return records_; }
  /// key = s1, a1, o1, ..., s_t, a_t  ->  number of records sharing it
  const std::map<std::vector<int>, int>& prefix_counts() const { return prefix_counts_; }

 private:
  std::vector<EpisodeRecord> records_;
  std::map<std::vector<int>, int> prefix_counts_;
};

/// Policy-free log-likelihood; -inf for impossible trajectories.
double loglikelihood(const LmdpPsi& model, int iota, std::span<const Step> steps);

double confidence_beta(double episodes, int class_size, double delta, double c_beta);

struct ConfidenceSet {
  std::vector<double> loglik;
  double beta = 0.0;
  std::vector<int> survivors;
  int mle = 0;

  bool contains(int i) const;
  /// Adds one trajectory to every model's log-likelihood and refreshes survivors.
  void absorb(const ModelClass& cls, const TrajectoryRecord& rec);
  void refresh();
};

ConfidenceSet update_confidence_set(const ModelClass& cls, const Dataset& data, double beta);

/// Rebuild every Lambda from scratch with features embedded under `ops`.
void bonus_rebuild(BonusAccumulator& acc, const PsrOperators& ops, const Dataset& data);

struct RunRow {
  int episode = 0;
  std::string phase;
  int model_index = -1;
  std::uint64_t policy_hash = 0;
  double value = 0.0;  // optimistic value, or V_tilde during exploration
  double inst_regret = 0.0;
  double cum_regret = 0.0;
  int survivors = 0;
  int truth_survives = -1;  // -1 when the class has no designated truth
  double realized_reward = 0.0;
};

struct RunConstants {
  double beta = 0.0;
  double alpha = 0.0;
  double lambda0_theory = 0.0;
  double lambda0 = 0.0;
  double eps_pe_theory = 0.0;
  double eps_pe = 0.0;
  double epsilon = 0.0;
  double c = 1.0;
  double c_beta = 1.0;
};

struct RunLog {
  std::vector<RunRow> rows;
  RunConstants constants;
  HistoryAccess access = HistoryAccess::kFull;
  int stop_episode = -1;     // exploration episodes executed before the stop test passed
  int theta_hat = -1;
  bool cap_hit = false;
  bool exploration_consumed_all = false;
  std::string aborted;       // non-empty if a budget error cut the run short

  double final_regret() const { return rows.empty() ? 0.0 : rows.back().cum_regret; }
};

struct OmleConfig {
  int K = 1000;
  double delta = 0.1;
  double c_beta = 1.0;
  std::uint64_t seed = 0;
  double planner_budget = 1e7;
  HistoryAccess access = HistoryAccess::kFull;
};

/// Optimistic MLE over blind policies; regret against the blind optimum of the truth.
RunLog omle_regret_min(const ModelClass& cls, const LmdpPsi& truth, const OmleConfig& cfg);

struct ExploreConfig {
  double epsilon = 0.1;
  double delta = 0.1;
  double c = 1.0;
  double c_beta = 1.0;
  std::optional<double> alpha;  // defaults to the certified alpha_eff of the truth
  int episode_cap = 50000;
  /// Horizon K inside beta = log(K |Theta| / delta); defaults to episode_cap.
  std::optional<double> beta_episodes;
  std::uint64_t seed = 0;
  double planner_budget = 1e7;
  double bonus_budget = kBonusTreeBudget;
};

struct AlgorithmConstants {
  double beta, lambda0_theory, eps_pe_theory, lambda0, eps_pe;
};

/// lambda0 = beta M^2 H^2 / alpha^2, eps_pe = alpha eps / (10 H M^2 sqrt(lambda0 M^2/alpha^2 + beta)).
/// Effective values use c lambda0 and divide the resulting threshold by c^2.
AlgorithmConstants explore_constants(int contexts, int horizon, double alpha, double epsilon,
                                     double beta, double c);

struct ExploreResult {
  int theta_hat = -1;
  RunLog log;
};

ExploreResult pure_explore(const ModelClass& cls, const LmdpPsi& truth, const ExploreConfig& cfg);

struct EteConfig {
  int K = 10000;
  double delta = 0.1;
  double c = 0.01;
  double c_beta = 1.0;
  double c_split = 1.0;
  std::optional<double> alpha;
  std::uint64_t seed = 0;
  double planner_budget = 1e7;
};

/// Pure exploration with eps = c_split K^{-1/3}, then the informed optimum of the estimate.
RunLog explore_then_exploit(const ModelClass& cls, const LmdpPsi& truth, const EteConfig& cfg);

}  // namespace lmdp
