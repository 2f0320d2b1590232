#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lmdp/common.hpp"
#include "lmdp/policy.hpp"

namespace lmdp {

struct Dims {
  int contexts = 1;      // M
  int states = 1;        // S
  int actions = 1;       // A
  int observations = 1;  // |O|
  int symbols = 1;       // |I|
  int horizon = 1;       // H

  bool operator==(const Dims&) const = default;
};

/**
 * Latent MDP with prospective side information.
 *
 * The dummy start transition is folded into initial(m, s): decision steps
 * are t = 1..H and s_1 is drawn from initial(m, .) of the latent context.
 * Observations are emitted from O_m(o | s, a) and decoded to rewards by a
 * known decoder. The emission matrix is |I| x M with column m equal to P(. | m).
 */
class LmdpPsi {
 public:
  LmdpPsi() = default;
  explicit LmdpPsi(const Dims& dims);

  const Dims& dims() const { return dims_; }
  int num_contexts() const { return dims_.contexts; }
  int num_states() const { return dims_.states; }
  int num_actions() const { return dims_.actions; }
  int num_observations() const { return dims_.observations; }
  int num_symbols() const { return dims_.symbols; }
  int horizon() const { return dims_.horizon; }

  double& transition(int m, int s, int a, int s2) { return trans_[tidx(m, s, a) + s2]; }
  double transition(int m, int s, int a, int s2) const { return trans_[tidx(m, s, a) + s2]; }
  std::span<const double> transition_row(int m, int s, int a) const {
    return {trans_.data() + tidx(m, s, a), static_cast<std::size_t>(dims_.states)};
  }

  double& observation(int m, int s, int a, int o) { return obs_[oidx(m, s, a) + o]; }
  double observation(int m, int s, int a, int o) const { return obs_[oidx(m, s, a) + o]; }
  std::span<const double> observation_row(int m, int s, int a) const {
    return {obs_.data() + oidx(m, s, a), static_cast<std::size_t>(dims_.observations)};
  }

  // stored column-major so that P(. | m) is contiguous
  double& emission(int iota, int m) { return emis_[m * dims_.symbols + iota]; }
  double emission(int iota, int m) const { return emis_[m * dims_.symbols + iota]; }
  std::span<const double> emission_column(int m) const {
    return {emis_.data() + m * dims_.symbols, static_cast<std::size_t>(dims_.symbols)};
  }
  Eigen::MatrixXd emission_matrix() const;

  double& initial(int m, int s) { return init_[m * dims_.states + s]; }
  double initial(int m, int s) const { return init_[m * dims_.states + s]; }
  std::span<const double> initial_row(int m) const {
    return {init_.data() + m * dims_.states, static_cast<std::size_t>(dims_.states)};
  }

  double& mixing(int m) { return mix_[m]; }
  double mixing(int m) const { return mix_[m]; }
  std::span<const double> mixing() const { return mix_; }

  double& reward(int o) { return reward_[o]; }
  double reward(int o) const { return reward_[o]; }
  std::span<const double> rewards() const { return reward_; }

  /// P(o, s' | m, s, a); the observation does not depend on s'.
  double step(int m, int s, int a, int o, int s2) const {
    return observation(m, s, a, o) * transition(m, s, a, s2);
  }

  std::string name;

 private:
  std::size_t tidx(int m, int s, int a) const {
    return ((static_cast<std::size_t>(m) * dims_.states + s) * dims_.actions + a) * dims_.states;
  }
  std::size_t oidx(int m, int s, int a) const {
    return ((static_cast<std::size_t>(m) * dims_.states + s) * dims_.actions + a) *
           dims_.observations;
  }

  Dims dims_;
  std::vector<double> trans_, obs_, emis_, init_, mix_, reward_;
};

struct Step {
  int state = 0;
  int action = 0;
  int obs = 0;
  bool operator==(const Step&) const = default;
};

struct TrajectoryRecord {
  int iota = 0;
  int context = 0;  // diagnostics only, never shown to a policy
  std::vector<Step> steps;
  bool operator==(const TrajectoryRecord&) const = default;
};

double total_reward(const LmdpPsi& model, const TrajectoryRecord& record);

/// Flat prefix s1, a1, o1, ..., s_t of a trajectory (t is 1-based).
std::vector<int> history_prefix(std::span<const Step> steps, int t);

struct ModelClass {
  std::vector<LmdpPsi> models;
  std::optional<int> truth_index;

  int size() const { return static_cast<int>(models.size()); }
  const Dims& dims() const { return models.front().dims(); }
  /// Throws ConfigError unless all members share spaces and horizon.
  void check() const;
};

struct ValidationIssue {
  enum class Kind { kShape, kSimplex, kRank, kReward };
  Kind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  std::vector<double> singular_values;  // of the emission matrix

  bool ok() const { return issues.empty(); }
  int count(ValidationIssue::Kind kind) const;
  std::string summary() const;
};

ValidationReport validate_model(const LmdpPsi& model);
/// Throws ModelError with the report summary if validation fails.
void require_valid(const LmdpPsi& model);

TrajectoryRecord sample_episode(const LmdpPsi& model, const InformedPolicy& policy, Rng& rng);

/// Policy-free factor sum_m p_m P(iota|m) prod_t O_m(o_t|s_t,a_t) T_m(s_{t+1}|s_t,a_t).
double trajectory_likelihood(const LmdpPsi& model, int iota, std::span<const Step> steps);

/// Joint probability P^pi(iota, tau) by direct mixture enumeration.
double trajectory_probability(const LmdpPsi& model, const BlindPolicy& policy, int iota,
                              std::span<const Step> steps);

/// Marginal P(iota) = sum_m p_m P(iota|m).
std::vector<double> symbol_marginal(const LmdpPsi& model);

/// Unnormalized context weights p_m P(iota|m).
std::vector<double> symbol_weights(const LmdpPsi& model, int iota);

/**
 * Expected cumulative reward of a blind policy started from unnormalized
 * context weights. Counts visited tree nodes against `budget`.
 */
double expected_return(const LmdpPsi& model, const BlindPolicy& policy,
                       std::span<const double> weights, double budget = 1e7);

/// Exact V^pi by enumeration over context, side information, and trajectory.
double value_of_policy(const LmdpPsi& model, const InformedPolicy& policy, double budget = 1e7);

}  // namespace lmdp
