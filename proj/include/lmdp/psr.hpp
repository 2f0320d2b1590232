#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lmdp/env.hpp"

namespace lmdp {

enum class LeftInverseKind {
  kLeastSquares,  ///< (E^T E)^{-1} E^T
  kMinL1,         ///< minimizes the induced 1->1 norm, via linear programming
};

/// Least-squares left inverse; throws ModelError naming the singular values on rank loss.
Eigen::MatrixXd left_inverse(const Eigen::MatrixXd& emission);

/// Left inverse with smallest max-column l1 norm. Refuses |I| * M above `max_entries`.
Eigen::MatrixXd min_l1_left_inverse(const Eigen::MatrixXd& emission, int max_entries = 4096);

/// Induced 1->1 norm (max column l1 norm).
double induced_l1_norm(const Eigen::MatrixXd& m);

/**
 * Observable operators of an LMDP-Psi instance.
 *
 *   B(o, s' | s, a) = E diag(P(o, s' | m, s, a)) E^+,   b0 = E p.
 *
 * Two extra families close the telescoping product at both ends:
 * entry(s1) = E diag(init_m(s1)) E^+ and terminal(o | s, a) = E diag(O_m(o|s,a)) E^+.
 */
class PsrOperators {
 public:
  int num_symbols() const { return dims_.symbols; }
  const Dims& dims() const { return dims_; }

  const Eigen::MatrixXd& op(int s, int a, int o, int s2) const {
    return ops_[((static_cast<std::size_t>(s) * dims_.actions + a) * dims_.observations + o) *
                    dims_.states +
                s2];
  }
  const Eigen::MatrixXd& terminal(int s, int a, int o) const {
    return term_[(static_cast<std::size_t>(s) * dims_.actions + a) * dims_.observations + o];
  }
  const Eigen::MatrixXd& entry(int s1) const { return entry_[s1]; }
  const Eigen::VectorXd& b0() const { return b0_; }
  const Eigen::MatrixXd& left_inv() const { return left_inv_; }
  const Eigen::MatrixXd& emission() const { return emission_; }

  friend PsrOperators build_operators_with(const LmdpPsi&, const Eigen::MatrixXd&, double);

 private:
  Dims dims_;
  std::vector<Eigen::MatrixXd> ops_, term_, entry_;
  Eigen::VectorXd b0_;
  Eigen::MatrixXd left_inv_, emission_;
};

PsrOperators build_operators(const LmdpPsi& model,
                             LeftInverseKind kind = LeftInverseKind::kLeastSquares,
                             double max_entries = 5e7);
PsrOperators build_operators_with(const LmdpPsi& model, const Eigen::MatrixXd& left_inv,
                                  double max_entries = 5e7);

struct PsrState {
  Eigen::VectorXd b;
  std::optional<Eigen::VectorXd> b_bar;  // empty for zero-mass histories
  int t = 1;
  double mass = 0.0;  // ||b||_1 after clamping

  bool zero_mass() const { return !b_bar.has_value(); }
};

/// Clamp entries in [-1e-12, 0) to zero.
void clamp_small_negatives(Eigen::VectorXd& v);

/**
 * Predictive state of an iota-blind prefix s1, a1, o1, ..., s_t.
 * b = B(y_{t-1}|x_{t-1}) ... B(y_1|x_1) entry(s1) b0.
 */
PsrState psr_state(const PsrOperators& ops, std::span<const int> prefix);

/// One-step update: b -> B(o, s2 | s, a) b.
Eigen::VectorXd psr_advance(const PsrOperators& ops, const Eigen::VectorXd& b, int s, int a,
                            int o, int s2);
PsrState normalize_state(Eigen::VectorXd b, int t);

/// e_iota^T (prod B) b0 times pi(tau): the factorized joint probability.
double psr_trajectory_probability(const PsrOperators& ops, const BlindPolicy& policy, int iota,
                                  std::span<const Step> steps);

/**
 * max over vertices b = +-e_j and deterministic continuations from step t of
 * sum over futures (and iota) of |psi^T b|, where x_t = (s, a) is fixed.
 */
double conditioning_constant(const PsrOperators& ops, int t, int s, int a, double budget = 1e7);

/// Same as conditioning_constant with the sum restricted to a single iota.
double conditional_conditioning(const PsrOperators& ops, int iota, int t, int s, int a,
                                double budget = 1e7);

/// Number of future tree nodes visited per vertex at step t.
double conditioning_tree_size(const Dims& dims, int t);

}  // namespace lmdp
