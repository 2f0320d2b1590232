#pragma once

#include <functional>
#include <vector>

#include "lmdp/env.hpp"
#include "lmdp/fixtures.hpp"
#include "lmdp/policy.hpp"

namespace lmdp::testing {

/// Calls f(steps) for every length-H sequence of (s, a, o) triples.
inline void for_each_trajectory(const Dims& d, const std::function<void(const std::vector<Step>&)>& f) {
  std::vector<Step> steps(d.horizon);
  std::function<void(int)> rec = [&](int t) {
    if (t == d.horizon) {
      f(steps);
      return;
    }
    for (int s = 0; s < d.states; ++s)
      for (int a = 0; a < d.actions; ++a)
        for (int o = 0; o < d.observations; ++o) {
          steps[t] = {s, a, o};
          rec(t + 1);
        }
  };
  rec(0);
}

/// Random instance whose emission has full column rank.
inline LmdpPsi valid_random_instance(const Dims& d, Rng& rng, double sparsity = 0.0) {
  for (int tries = 0; tries < 100; ++tries) {
    LmdpPsi th = random_instance(d, rng, sparsity);
    if (validate_model(th).ok()) return th;
  }
  throw ModelError("could not draw a valid random instance");
}

/// Deterministic blind policy with a random action at every prefix up to step H.
inline BlindPolicy random_deterministic_policy(const Dims& d, Rng& rng,
                                               HistoryAccess access = HistoryAccess::kFull) {
  BlindPolicy pi(d.actions, access);
  std::vector<int> h;
  std::function<void(int)> rec = [&](int t) {
    pi.set_action(h, rng.below(d.actions));
    if (t == d.horizon) return;
    for (int a = 0; a < d.actions; ++a)
      for (int o = 0; o < d.observations; ++o)
        for (int s2 = 0; s2 < d.states; ++s2) {
          h.insert(h.end(), {a, o, s2});
          rec(t + 1);
          h.resize(h.size() - 3);
        }
  };
  for (int s = 0; s < d.states; ++s) {
    h = {s};
    rec(1);
  }
  return pi;
}

/// Identity emission: iota reveals the context.
inline void set_identity_emission(LmdpPsi& th) {
  for (int i = 0; i < th.num_symbols(); ++i)
    for (int m = 0; m < th.num_contexts(); ++m) th.emission(i, m) = i == m ? 1.0 : 0.0;
}

/// Optimal value of context m's MDP by plain value iteration.
inline double mdp_value(const LmdpPsi& th, int m) {
  const Dims& d = th.dims();
  std::vector<double> v(d.states, 0.0);
  for (int t = d.horizon; t >= 1; --t) {
    std::vector<double> nv(d.states, 0.0);
    for (int s = 0; s < d.states; ++s) {
      double best = kNegInf;
      for (int a = 0; a < d.actions; ++a) {
        double q = 0.0;
        for (int o = 0; o < d.observations; ++o) q += th.observation(m, s, a, o) * th.reward(o);
        if (t < d.horizon)
          for (int s2 = 0; s2 < d.states; ++s2) q += th.transition(m, s, a, s2) * v[s2];
        best = std::max(best, q);
      }
      nv[s] = best;
    }
    v = nv;
  }
  double total = 0.0;
  for (int s = 0; s < d.states; ++s) total += th.initial(m, s) * v[s];
  return total;
}

}  // namespace lmdp::testing
