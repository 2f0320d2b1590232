#include <algorithm>
#include <bit>
#include <cmath>

#include "lmdp/kernels.hpp"
#include "lmdp/learning.hpp"
#include "lmdp/lp.hpp"

namespace lmdp {

PatternBound solve_sign_pattern(const Eigen::MatrixXd& e, std::uint32_t mask) {
  const int n_sym = static_cast<int>(e.rows());
  const int n_ctx = static_cast<int>(e.cols());
  PatternBound out;
  out.mask = mask;
  // max (a - b)/2  s.t.  a <= (E^T z)_i on positive coords, (E^T z)_j <= b on negative ones,
  // z in [-1, 1]. Variables are shifted by +1 so that zero is a feasible start.
  lp::Problem prob;
  for (int i = 0; i < n_sym; ++i) prob.add_var(0.0, 0.0, 2.0);
  const int va = prob.add_var(-0.5, 0.0, 2.0);
  const int vb = prob.add_var(0.5, 0.0, 2.0);
  for (int m = 0; m < n_ctx; ++m) {
    const double colsum = e.col(m).sum();
    std::vector<std::pair<int, double>> row;
    const bool pos = (mask >> m) & 1u;
    for (int i = 0; i < n_sym; ++i)
      if (e(i, m) != 0.0) row.push_back({i, pos ? -e(i, m) : e(i, m)});
    row.push_back({pos ? va : vb, pos ? 1.0 : -1.0});
    prob.add_row(std::move(row), lp::Sense::kLessEqual, pos ? 1.0 - colsum : colsum - 1.0);
  }
  const auto sol = lp::solve(prob);
  if (sol.status != lp::Status::kOptimal) return out;
  out.solved = true;

  // certified lower bound from the dual point
  Eigen::VectorXd z(n_sym);
  for (int i = 0; i < n_sym; ++i) z(i) = std::clamp(sol.x[i] - 1.0, -1.0, 1.0);
  const Eigen::VectorXd c = e.transpose() * z;
  double min_p = kInf, max_n = kNegInf;
  for (int m = 0; m < n_ctx; ++m) {
    if ((mask >> m) & 1u)
      min_p = std::min(min_p, c(m));
    else
      max_n = std::max(max_n, c(m));
  }
  out.lower = 0.5 * (min_p - max_n);

  // primal witness from the row multipliers, renormalized onto the feasible set
  Eigen::VectorXd x(n_ctx);
  double sp = 0.0, sn = 0.0;
  for (int m = 0; m < n_ctx; ++m) {
    const double y = std::abs(sol.duals[m]);
    x(m) = y;
    ((mask >> m) & 1u ? sp : sn) += y;
  }
  for (int m = 0; m < n_ctx; ++m) {
    const bool pos = (mask >> m) & 1u;
    const double tot = pos ? sp : sn;
    const int count = static_cast<int>(pos ? std::popcount(mask) : n_ctx - std::popcount(mask));
    const double v = tot > 0.0 ? x(m) / tot : 1.0 / count;
    x(m) = pos ? 0.5 * v : -0.5 * v;
  }
  out.upper = (e * x).lpNorm<1>();
  out.witness.assign(x.data(), x.data() + n_ctx);
  return out;
}

namespace serial {

void loglik_models(const ModelClass& cls, const TrajectoryRecord& rec, std::span<double> out) {
  for (int i = 0; i < cls.size(); ++i)
    out[i] = loglikelihood(cls.models[i], rec.iota, rec.steps);
}

std::vector<TrajectoryRecord> simulate_batch(const LmdpPsi& model, const InformedPolicy& policy,
                                             std::uint64_t seed, int first, int count) {
  std::vector<TrajectoryRecord> out(count);
  for (int k = 0; k < count; ++k) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(first + k));
    out[k] = sample_episode(model, policy, rng);
  }
  return out;
}

std::vector<PatternBound> alpha_patterns(const Eigen::MatrixXd& emission) {
  const int m = static_cast<int>(emission.cols());
  const std::uint32_t full = (1u << m) - 1u;
  std::vector<PatternBound> out(full - 1);
  for (std::uint32_t mask = 1; mask < full; ++mask)
    out[mask - 1] = solve_sign_pattern(emission, mask);
  return out;
}

std::vector<double> conditioning_sweep(const PsrOperators& ops, double budget) {
  const Dims& d = ops.dims();
  const int n = d.symbols * d.horizon * d.states * d.actions;
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) {
    int r = k;
    const int a = r % d.actions;
    r /= d.actions;
    const int s = r % d.states;
    r /= d.states;
    const int t = r % d.horizon + 1;
    const int iota = r / d.horizon;
    out[k] = conditional_conditioning(ops, iota, t, s, a, budget);
  }
  return out;
}

}  // namespace serial

}  // namespace lmdp
