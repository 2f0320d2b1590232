#include "lmdp/hardgen.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace lmdp {

std::vector<int> HardInstanceSpec::optimal_sequence() const {
  std::vector<int> seq(d());
  for (int t = 0; t < d(); ++t)
    seq[t] = control_action(optimal_controls.empty() ? 0 : optimal_controls[t]);
  return seq;
}

void HardInstanceSpec::validate() const {
  if (contexts < 8 || contexts % 4 != 0) throw ConfigError("hard family needs M >= 8 and M % 4 == 0");
  if (contexts > 30) throw ConfigError("hard family supports M <= 30");
  if (explore_actions < 1) throw ConfigError("need at least one explore action");
  if (control_actions < 2) throw ConfigError("need at least two control actions");
  if (alphabet < 1) throw ConfigError("per-group alphabet must be non-empty");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!(epsilon > 0.0 && epsilon < 0.25)) throw ConfigError("epsilon must lie in (0, 1/4)");
  if (optimal_explore < 0 || optimal_explore >= explore_actions)
    throw ConfigError("a*_explore out of range");
  if (!optimal_controls.empty()) {
    if (static_cast<int>(optimal_controls.size()) != d())
      throw ConfigError("a*_{1:d} must have length d = M/4");
    for (int a : optimal_controls)
      if (a < 0 || a >= control_actions) throw ConfigError("a*_t out of the control range");
  }
}

bool HardInstanceSpec::in_lower_bound_regime() const {
  return alpha < 1.0 / (256.0 * std::sqrt(double(contexts)));
}

double HardInstanceSpec::alpha_threshold() const {
  return alpha / (128.0 * std::sqrt(double(contexts)));
}

double sampled_alpha_upper(const Eigen::MatrixXd& e, int samples, Rng& rng) {
  const int n = static_cast<int>(e.cols());
  if (n < 2) return kInf;
  double best = kInf;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) best = std::min(best, 0.5 * (e.col(i) - e.col(j)).lpNorm<1>());
  for (int k = 0; k < samples; ++k) {
    for (int i = 0; i < n; ++i) x(i) = rng.uniform() - 0.5;
    x.array() -= x.mean();
    const double norm = x.lpNorm<1>();
    if (norm <= 0.0) continue;
    x /= norm;
    best = std::min(best, (e * x).lpNorm<1>());
  }
  return best;
}

AlphaCertificate effective_alpha(const Eigen::MatrixXd& e, bool parallel) {
  const int n = static_cast<int>(e.cols());
  AlphaCertificate cert;
  if (n == 1) {
    cert.value = cert.lower = kInf;
    cert.certified = true;
    return cert;
  }
  if (n > 12) {
    Rng rng(0x5eedULL);
    cert.value = sampled_alpha_upper(e, 200000, rng);
    cert.lower = 0.0;
    cert.certified = false;
    return cert;
  }
  const auto bounds = parallel ? omp::alpha_patterns(e) : serial::alpha_patterns(e);
  cert.patterns = static_cast<int>(bounds.size());
  cert.value = kInf;
  cert.lower = kInf;
  bool all = true;
  for (const auto& b : bounds) {
    if (!b.solved) {
      all = false;
      continue;
    }
    if (b.upper < cert.value) {
      cert.value = b.upper;
      cert.argmin_mask = b.mask;
      cert.witness = b.witness;
    }
    cert.lower = std::min(cert.lower, b.lower);
  }
  cert.certified = all && cert.value - cert.lower <= 1e-9;
  if (!all) cert.lower = 0.0;
  return cert;
}

Eigen::MatrixXd hard_emission(const HardInstanceSpec& spec, const EmissionAssignment& asg) {
  spec.validate();
  const int half = spec.contexts / 2;
  if (asg.rows != half * spec.alphabet || asg.cols != half)
    throw ConfigError("emission assignment does not match the spec");
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(spec.num_symbols(), spec.contexts);
  for (int m = 0; m < half; ++m) {
    e(spec.hard_symbol(), m) = 0.5;
    double total = 0.0;
    for (int r = 0; r < asg.rows; ++r) total += 1.0 + spec.alpha * asg.sign(r, m);
    for (int r = 0; r < asg.rows; ++r) e(r, m) = 0.5 * (1.0 + spec.alpha * asg.sign(r, m)) / total;
  }
  const double share = 1.0 / (2.0 * spec.alphabet);
  for (int m = half; m < spec.contexts; ++m)
    for (int j = 0; j < spec.alphabet; ++j) {
      e(spec.symbol(m - half, j), m) = share;
      e(spec.symbol(m, j), m) = share;
    }
  return e;
}

void certify(const HardInstanceSpec& spec, EmissionAssignment& asg) {
  asg.cert = effective_alpha(hard_emission(spec, asg));
}

EmissionAssignment sample_emission_assignment(const HardInstanceSpec& spec, Rng& rng,
                                              int max_draws) {
  spec.validate();
  EmissionAssignment asg;
  asg.cols = spec.contexts / 2;
  asg.rows = asg.cols * spec.alphabet;
  const double threshold = spec.alpha_threshold();
  for (int draw = 1; draw <= max_draws; ++draw) {
    asg.signs.resize(static_cast<std::size_t>(asg.rows) * asg.cols);
    for (int& s : asg.signs) s = rng.sign();
    asg.draws = draw;
    certify(spec, asg);
    const double measured = asg.cert.certified ? asg.cert.lower : asg.cert.value;
    if (measured >= threshold) return asg;
  }
  throw ConfigError("no emission assignment reached alpha/(128 sqrt M) within " +
                    std::to_string(max_draws) + " draws; try a larger per-group alphabet");
}

namespace {

struct Probs {
  double keep_eps;  // 1 - eps
  double eps;       // exactly 1 - keep_eps
};

Probs split(double p) {
  const double keep = 1.0 - p;
  return {keep, 1.0 - keep};
}

LmdpPsi build(const HardInstanceSpec& spec, const EmissionAssignment& asg, bool reference) {
  spec.validate();
  const int M = spec.contexts, d = spec.d();
  Dims dims{M, spec.num_states(), spec.num_actions(), 2, spec.num_symbols(), spec.horizon()};
  LmdpPsi th(dims);
  th.name = reference ? "hard-reference" : "hard";
  th.reward(0) = 0.0;
  th.reward(1) = 1.0;
  const Eigen::MatrixXd e = hard_emission(spec, asg);
  for (int m = 0; m < M; ++m) {
    th.mixing(m) = 1.0 / M;
    th.initial(m, HardInstanceSpec::kInit) = 1.0;
    for (int i = 0; i < dims.symbols; ++i) th.emission(i, m) = e(i, m);
  }

  const double eighth = 0.125;
  auto go = [&](int m, int s, int a, int s2, double p) { th.transition(m, s, a, s2) += p; };
  auto reward = [&](int m, int s, int a, double p1) {
    th.observation(m, s, a, 1) = p1;
    th.observation(m, s, a, 0) = 1.0 - p1;
  };
  const auto astar = spec.optimal_sequence();
  const Probs eps = split(spec.epsilon);

  for (int m = 0; m < M; ++m) {
    const bool learn = m < d;
    const bool obs = m >= 2 * d;
    for (int a = 0; a < dims.actions; ++a) {
      // absorbing states
      go(m, HardInstanceSpec::kTerminal, a, HardInstanceSpec::kTerminal, 1.0);
      reward(m, HardInstanceSpec::kTerminal, a, 0.0);
      go(m, HardInstanceSpec::kPending, a, HardInstanceSpec::kTerminal, 1.0);
      reward(m, HardInstanceSpec::kPending, a, eighth);

      // initial step
      const int s0 = HardInstanceSpec::kInit;
      reward(m, s0, a, 0.0);
      const bool explore = a < spec.explore_actions;
      if (obs || !explore) {
        go(m, s0, a, HardInstanceSpec::kTerminal, 1.0);
        if (obs && a == spec.exploit_action(m - 2 * d)) reward(m, s0, a, 1.0);
      } else if (reference) {
        go(m, s0, a, learn ? spec.ref_state(1) : spec.hard_state(1), 1.0);
      } else if (a == spec.explore_action(spec.optimal_explore)) {
        go(m, s0, a, spec.hard_state(1), learn ? eps.eps : eps.keep_eps);
        go(m, s0, a, spec.ref_state(1), learn ? eps.keep_eps : eps.eps);
      } else {
        go(m, s0, a, learn ? spec.ref_state(1) : spec.hard_state(1), 1.0);
      }

      // chains
      for (int t = 1; t <= d; ++t) {
        for (int chain = 0; chain < 2; ++chain) {
          const int s = chain == 0 ? spec.ref_state(t) : spec.hard_state(t);
          if (!spec.is_control(a)) {
            go(m, s, a, HardInstanceSpec::kTerminal, 1.0);
            reward(m, s, a, 0.0);
            continue;
          }
          const bool special = chain == 1 && learn && !reference;
          if (t == d) {
            go(m, s, a, HardInstanceSpec::kTerminal, 1.0);
            reward(m, s, a, special && m == 0 && a == astar[d - 1] ? 1.0 : eighth);
            continue;
          }
          reward(m, s, a, 0.0);
          const int next = chain == 0 ? spec.ref_state(t + 1) : spec.hard_state(t + 1);
          if (!special) {
            const Probs q = split(1.0 / (d + 1 - t));
            go(m, s, a, next, q.keep_eps);
            go(m, s, a, HardInstanceSpec::kPending, q.eps);
            continue;
          }
          const int j = m + 1;
          const bool on_path = a == astar[t - 1];
          bool stop;
          if (j == 1 || j >= d - t + 2)
            stop = !on_path;
          else if (j == d - t + 1)
            stop = on_path;
          else
            stop = false;
          go(m, s, a, stop ? HardInstanceSpec::kPending : next, 1.0);
        }
      }
    }
  }
  require_valid(th);
  return th;
}

using Rational = mpq_class;

Rational exact_likelihood(const LmdpPsi& th, int iota, std::span<const Step> steps) {
  Rational total = 0;
  const int h = th.horizon();
  for (int m = 0; m < th.num_contexts(); ++m) {
    const double head = th.mixing(m) * th.emission(iota, m) * th.initial(m, steps[0].state);
    if (head == 0.0) continue;
    Rational w = Rational(th.mixing(m)) * Rational(th.emission(iota, m)) *
                 Rational(th.initial(m, steps[0].state));
    for (int t = 0; t < h && w != 0; ++t) {
      const Step& st = steps[t];
      w *= Rational(th.observation(m, st.state, st.action, st.obs));
      if (t + 1 < h) w *= Rational(th.transition(m, st.state, st.action, steps[t + 1].state));
    }
    total += w;
  }
  return total;
}

Rational exact_symbol_mass(const LmdpPsi& th, int iota) {
  Rational z = 0;
  for (int m = 0; m < th.num_contexts(); ++m)
    z += Rational(th.mixing(m)) * Rational(th.emission(iota, m));
  return z;
}

void check_pair(const LmdpPsi& p0, const LmdpPsi& p1, int iota, const OpenLoopTest& test) {
  if (!(p0.dims() == p1.dims())) throw ConfigError("KL: models do not share spaces");
  if (iota < 0 || iota >= p0.num_symbols()) throw ConfigError("KL: symbol out of range");
  if (static_cast<int>(test.controls.size()) != p0.horizon() - 1)
    throw ConfigError("KL: control sequence must have length H - 1");
}

}  // namespace

LmdpPsi build_hard_instance(const HardInstanceSpec& spec, const EmissionAssignment& asg) {
  return build(spec, asg, false);
}

LmdpPsi build_reference(const HardInstanceSpec& spec, const EmissionAssignment& asg) {
  return build(spec, asg, true);
}

std::vector<ConditionalOutcome> conditional_outcomes(const LmdpPsi& p0, const LmdpPsi& p1,
                                                     int iota, const OpenLoopTest& test) {
  check_pair(p0, p1, iota, test);
  const Dims& d = p0.dims();
  auto z0 = symbol_weights(p0, iota), z1 = symbol_weights(p1, iota);
  double m0 = 0.0, m1 = 0.0;
  for (double x : z0) m0 += x;
  for (double x : z1) m1 += x;
  if (m0 <= 0.0 || m1 <= 0.0) throw ConfigError("KL: symbol has zero probability");

  std::vector<ConditionalOutcome> out;
  std::vector<Step> steps(d.horizon);
  // support of either model, tracked with per-context weights
  std::function<void(int, int, std::vector<double>, std::vector<double>)> walk =
      [&](int t, int s, std::vector<double> w0, std::vector<double> w1) {
        const int a = t == 1 ? test.initial_action : test.controls[t - 2];
        for (int o = 0; o < d.observations; ++o) {
          steps[t - 1] = {s, a, o};
          std::vector<double> v0(d.contexts), v1(d.contexts);
          double s0 = 0.0, s1 = 0.0;
          for (int m = 0; m < d.contexts; ++m) {
            v0[m] = w0[m] * p0.observation(m, s, a, o);
            v1[m] = w1[m] * p1.observation(m, s, a, o);
            s0 += v0[m];
            s1 += v1[m];
          }
          if (s0 <= 0.0 && s1 <= 0.0) continue;
          if (t == d.horizon) {
            out.push_back({steps, trajectory_likelihood(p0, iota, steps) / m0,
                           trajectory_likelihood(p1, iota, steps) / m1});
            continue;
          }
          for (int s2 = 0; s2 < d.states; ++s2) {
            std::vector<double> u0(d.contexts), u1(d.contexts);
            double r0 = 0.0, r1 = 0.0;
            for (int m = 0; m < d.contexts; ++m) {
              u0[m] = v0[m] * p0.transition(m, s, a, s2);
              u1[m] = v1[m] * p1.transition(m, s, a, s2);
              r0 += u0[m];
              r1 += u1[m];
            }
            if (r0 <= 0.0 && r1 <= 0.0) continue;
            walk(t + 1, s2, u0, u1);
          }
        }
      };
  for (int s = 0; s < d.states; ++s) {
    std::vector<double> w0(d.contexts), w1(d.contexts);
    double r0 = 0.0, r1 = 0.0;
    for (int m = 0; m < d.contexts; ++m) {
      w0[m] = z0[m] * p0.initial(m, s);
      w1[m] = z1[m] * p1.initial(m, s);
      r0 += w0[m];
      r1 += w1[m];
    }
    if (r0 <= 0.0 && r1 <= 0.0) continue;
    walk(1, s, w0, w1);
  }
  return out;
}

double conditional_kl(const LmdpPsi& p0, const LmdpPsi& p1, int iota, const OpenLoopTest& test) {
  const auto outcomes = conditional_outcomes(p0, p1, iota, test);
  const Rational z0 = exact_symbol_mass(p0, iota), z1 = exact_symbol_mass(p1, iota);
  double kl = 0.0;
  for (const auto& oc : outcomes) {
    const Rational l0 = exact_likelihood(p0, iota, oc.steps);
    if (l0 == 0) continue;
    const Rational l1 = exact_likelihood(p1, iota, oc.steps);
    if (l1 == 0) return kInf;
    const Rational ratio = (l0 * z1) / (l1 * z0);
    if (ratio == 1) continue;
    const Rational excess = ratio - 1;
    const Rational prob = l0 / z0;
    kl += prob.get_d() * std::log1p(excess.get_d());
  }
  return kl;
}

double weighted_symbol_kl(const LmdpPsi& p0, const LmdpPsi& p1, std::span<const int> symbols,
                          const OpenLoopTest& test) {
  const auto marg = symbol_marginal(p0);
  double num = 0.0, den = 0.0;
  for (int i : symbols) {
    if (marg[i] <= 0.0) continue;
    num += marg[i] * conditional_kl(p0, p1, i, test);
    den += marg[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

KlChainResult kl_chain_identity_check(const LmdpPsi& p0, const LmdpPsi& p1,
                                      const Strategy& strategy, int K, double budget) {
  if (K < 1 || K > 3) throw ConfigError("kl_chain_identity_check supports 1 <= K <= 3");
  if (!(p0.dims() == p1.dims())) throw ConfigError("KL: models do not share spaces");
  const auto marg = symbol_marginal(p0);
  std::map<std::pair<int, OpenLoopTest>, std::vector<ConditionalOutcome>> outcomes;
  std::map<std::pair<int, OpenLoopTest>, double> kls;
  KlChainResult res;
  std::vector<TrajectoryRecord> past;

  std::function<void(int, double, double)> recurse = [&](int k, double prob0, double logratio) {
    if (k == K) {
      if (++res.sequences > budget)
        throw BudgetError("K-episode outcome enumeration too large", res.sequences, budget);
      res.rhs += prob0 * logratio;
      return;
    }
    for (int iota = 0; iota < p0.num_symbols(); ++iota) {
      if (marg[iota] <= 0.0) continue;
      const OpenLoopTest test = strategy(k + 1, iota, past);
      const auto key = std::make_pair(iota, test);
      auto it = outcomes.find(key);
      if (it == outcomes.end()) {
        it = outcomes.emplace(key, conditional_outcomes(p0, p1, iota, test)).first;
        kls.emplace(key, conditional_kl(p0, p1, iota, test));
      }
      res.lhs += prob0 * marg[iota] * kls.at(key);
      for (const auto& oc : it->second) {
        if (oc.p0 <= 0.0) continue;
        if (oc.p1 <= 0.0) throw ModelError("KL: outcome impossible under the alternative");
        TrajectoryRecord rec;
        rec.iota = iota;
        rec.steps = oc.steps;
        past.push_back(std::move(rec));
        recurse(k + 1, prob0 * marg[iota] * oc.p0, logratio + std::log(oc.p0 / oc.p1));
        past.pop_back();
      }
    }
  };
  recurse(0, 1.0, 0.0);
  return res;
}

}  // namespace lmdp
