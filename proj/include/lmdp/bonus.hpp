#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lmdp/env.hpp"

namespace lmdp {

/// Per-(t, s, a) elliptical matrices lambda0 I + sum b_bar b_bar^T and their inverses.
class BonusAccumulator {
 public:
  BonusAccumulator() = default;
  BonusAccumulator(const Dims& dims, double lambda0);

  void reset();
  void add(int t, int s, int a, const Eigen::VectorXd& feature, double weight = 1.0);
  void refresh_inverses();

  const Eigen::MatrixXd& gram(int t, int s, int a) const { return gram_[idx(t, s, a)]; }
  const Eigen::MatrixXd& inverse(int t, int s, int a) const { return inv_[idx(t, s, a)]; }
  int count(int t, int s, int a) const { return counts_[idx(t, s, a)]; }

  /// ||b_bar||_{Lambda^{-1}}
  double bonus(int t, int s, int a, const Eigen::VectorXd& b_bar) const;

  double lambda0() const { return lambda0_; }
  const Dims& dims() const { return dims_; }
  double max_inverse_residual() const;
  double min_eigenvalue() const;

 private:
  std::size_t idx(int t, int s, int a) const {
    return (static_cast<std::size_t>(t - 1) * dims_.states + s) * dims_.actions + a;
  }

  Dims dims_;
  double lambda0_ = 1.0;
  std::vector<Eigen::MatrixXd> gram_, inv_;
  std::vector<int> counts_;
  std::vector<bool> dirty_;
};

}  // namespace lmdp
