#pragma once

// Hot loops with two implementations each: a plain serial reference and an
// OpenMP version. Every parallel iteration writes its own output slot, so the
// two produce bit-identical results; tests compare them directly.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lmdp/env.hpp"
#include "lmdp/psr.hpp"

namespace lmdp {

/// Bounds on min ||E x||_1 for one sign pattern of x (bit i set -> x_i >= 0).
struct PatternBound {
  std::uint32_t mask = 0;
  double lower = 0.0;  // from the dual point z
  double upper = 0.0;  // ||E x||_1 at the primal witness
  std::vector<double> witness;
  bool solved = false;
};

PatternBound solve_sign_pattern(const Eigen::MatrixXd& emission, std::uint32_t mask);

namespace serial {

void loglik_models(const ModelClass& cls, const TrajectoryRecord& rec, std::span<double> out);
std::vector<TrajectoryRecord> simulate_batch(const LmdpPsi& model, const InformedPolicy& policy,
                                             std::uint64_t seed, int first, int count);
std::vector<PatternBound> alpha_patterns(const Eigen::MatrixXd& emission);
/// Row-major over (iota, t-1, s, a).
std::vector<double> conditioning_sweep(const PsrOperators& ops, double budget);

}  // namespace serial

namespace omp {

void loglik_models(const ModelClass& cls, const TrajectoryRecord& rec, std::span<double> out);
std::vector<TrajectoryRecord> simulate_batch(const LmdpPsi& model, const InformedPolicy& policy,
                                             std::uint64_t seed, int first, int count);
std::vector<PatternBound> alpha_patterns(const Eigen::MatrixXd& emission);
std::vector<double> conditioning_sweep(const PsrOperators& ops, double budget);

int max_threads();

}  // namespace omp

}  // namespace lmdp
