#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lmdp/env.hpp"
#include "lmdp/kernels.hpp"

namespace lmdp {

/**
 * Parameters of the lower-bound family.
 *
 * Layout (0-based):
 *   contexts  [0, d) learn group, [d, 2d) reference group, [2d, M) observation group
 *   actions   explore [0, nE), exploit [nE, nE + M/2), control after that
 *   states    0 init, 1 terminal, 2 pending-reward, then the hard chain, then the ref chain
 *   symbols   M groups of `alphabet` symbols followed by the hard symbol
 *   obs       0 -> reward 0, 1 -> reward 1
 */
struct HardInstanceSpec {
  int contexts = 8;
  int explore_actions = 2;
  int control_actions = 2;
  double alpha = 0.003;
  double epsilon = 0.04;
  int alphabet = 64;
  std::vector<int> optimal_controls;  // a*_{1:d} as control indices; empty means all zero
  int optimal_explore = 0;

  int d() const { return contexts / 4; }
  int horizon() const { return d() + 1; }
  int exploit_actions() const { return contexts / 2; }
  int num_actions() const { return explore_actions + exploit_actions() + control_actions; }
  int num_states() const { return 3 + 2 * d(); }
  int num_symbols() const { return contexts * alphabet + 1; }

  int explore_action(int k) const { return k; }
  int exploit_action(int k) const { return explore_actions + k; }
  int control_action(int k) const { return explore_actions + exploit_actions() + k; }
  bool is_control(int a) const { return a >= control_action(0); }

  static constexpr int kInit = 0;
  static constexpr int kTerminal = 1;
  static constexpr int kPending = 2;
  int hard_state(int t) const { return 3 + t - 1; }
  int ref_state(int t) const { return 3 + d() + t - 1; }

  int symbol(int group, int j) const { return group * alphabet + j; }
  int hard_symbol() const { return contexts * alphabet; }

  /// a*_{1:d} as global action indices.
  std::vector<int> optimal_sequence() const;
  /// Throws ConfigError on invalid parameters.
  void validate() const;
  /// alpha < 1/(256 sqrt M); outside this range the instance is still built.
  bool in_lower_bound_regime() const;
  double alpha_threshold() const;  // alpha / (128 sqrt M)
};

struct AlphaCertificate {
  double value = 0.0;   // best realized ||E x||_1 (an upper bound on the minimum)
  double lower = 0.0;   // certified lower bound
  bool certified = false;
  std::uint32_t argmin_mask = 0;
  std::vector<double> witness;
  int patterns = 0;
};

/**
 * min ||E x||_1 over {1^T x = 0, ||x||_1 = 1}, one LP per sign pattern.
 * Exact for M <= 12; larger M falls back to sampling and is not certified.
 */
AlphaCertificate effective_alpha(const Eigen::MatrixXd& emission, bool parallel = true);

/// Minimum of ||E x||_1 over random zero-sum unit directions and all pair vertices.
double sampled_alpha_upper(const Eigen::MatrixXd& emission, int samples, Rng& rng);

struct EmissionAssignment {
  int rows = 0;  // symbols in the first M/2 groups
  int cols = 0;  // contexts in the first half
  std::vector<int> signs;  // row-major rows x cols, entries +-1
  AlphaCertificate cert;
  int draws = 0;  // number of sign draws, 1 if the first one passed

  int sign(int row, int m) const { return signs[static_cast<std::size_t>(row) * cols + m]; }
};

EmissionAssignment sample_emission_assignment(const HardInstanceSpec& spec, Rng& rng,
                                              int max_draws = 10);

/// Emission matrix for given signs; certifies nothing.
Eigen::MatrixXd hard_emission(const HardInstanceSpec& spec, const EmissionAssignment& assignment);

/// Fills in the certificate for hand-made signs.
void certify(const HardInstanceSpec& spec, EmissionAssignment& assignment);

LmdpPsi build_hard_instance(const HardInstanceSpec& spec, const EmissionAssignment& assignment);
LmdpPsi build_reference(const HardInstanceSpec& spec, const EmissionAssignment& assignment);

/// Open-loop action plan: a0 at step 1, then controls[t-1] at step t + 1.
struct OpenLoopTest {
  int initial_action = 0;
  std::vector<int> controls;
  auto operator<=>(const OpenLoopTest&) const = default;
};

struct ConditionalOutcome {
  std::vector<Step> steps;
  double p0 = 0.0;  // P_0(tau | iota, test)
  double p1 = 0.0;
};

std::vector<ConditionalOutcome> conditional_outcomes(const LmdpPsi& p0, const LmdpPsi& p1,
                                                     int iota, const OpenLoopTest& test);

/// KL(P_0(. | iota, test) || P_1(. | iota, test)), evaluated in rational arithmetic.
double conditional_kl(const LmdpPsi& p0, const LmdpPsi& p1, int iota, const OpenLoopTest& test);

/// P(iota)-weighted average of conditional_kl over a set of symbols.
double weighted_symbol_kl(const LmdpPsi& p0, const LmdpPsi& p1, std::span<const int> symbols,
                          const OpenLoopTest& test);

using Strategy =
    std::function<OpenLoopTest(int episode, int iota, std::span<const TrajectoryRecord> past)>;

struct KlChainResult {
  double lhs = 0.0;  // sum over (iota, test) of E_0[count] KL(conditional)
  double rhs = 0.0;  // KL of the joint K-episode laws
  double sequences = 0.0;
};

KlChainResult kl_chain_identity_check(const LmdpPsi& p0, const LmdpPsi& p1,
                                      const Strategy& strategy, int K, double budget = 1e7);

}  // namespace lmdp
