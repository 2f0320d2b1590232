#include <omp.h>

#include "lmdp/kernels.hpp"
#include "lmdp/learning.hpp"

namespace lmdp::omp {

int max_threads() { return omp_get_max_threads(); }

void loglik_models(const ModelClass& cls, const TrajectoryRecord& rec, std::span<double> out) {
  const int n = cls.size();
#pragma omp parallel for schedule(static) if (n > 16)
  for (int i = 0; i < n; ++i) out[i] = loglikelihood(cls.models[i], rec.iota, rec.steps);
}

std::vector<TrajectoryRecord> simulate_batch(const LmdpPsi& model, const InformedPolicy& policy,
                                             std::uint64_t seed, int first, int count) {
  if (policy.num_actions() != model.num_actions()) throw ConfigError("policy action count mismatch");
  std::vector<TrajectoryRecord> out(count);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < count; ++k) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(first + k));
    out[k] = sample_episode(model, policy, rng);
  }
  return out;
}

std::vector<PatternBound> alpha_patterns(const Eigen::MatrixXd& emission) {
  const int m = static_cast<int>(emission.cols());
  const long full = (1L << m) - 1;
  std::vector<PatternBound> out(full - 1);
#pragma omp parallel for schedule(dynamic, 4)
  for (long mask = 1; mask < full; ++mask)
    out[mask - 1] = solve_sign_pattern(emission, static_cast<std::uint32_t>(mask));
  return out;
}

std::vector<double> conditioning_sweep(const PsrOperators& ops, double budget) {
  const Dims& d = ops.dims();
  const int n = d.symbols * d.horizon * d.states * d.actions;
  std::vector<double> out(n);
  // BudgetError must not escape an OpenMP region, so the size is checked up front
  const double need = conditioning_tree_size(d, 1) * d.symbols;
  if (need > budget) throw BudgetError("conditioning future tree too large", need, budget);
#pragma omp parallel for schedule(dynamic)
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

}  // namespace lmdp::omp
