#include "lmdp/planning.hpp"

#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace lmdp {

namespace {

constexpr double kTieTol = 1e-12;

struct BeliefKey {
  int t;
  int s;
  std::vector<long long> q;
  bool operator==(const BeliefKey&) const = default;
};

struct BeliefKeyHash {
  std::size_t operator()(const BeliefKey& k) const {
    std::uint64_t h = splitmix64(static_cast<std::uint64_t>(k.t) * 1000003ULL + k.s);
    for (long long v : k.q) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
  }
};

struct Decision {
  double value;
  int action;
};

class BeliefPlanner {
 public:
  BeliefPlanner(const LmdpPsi& model, double budget) : model_(model), budget_(budget) {}

  Decision solve(int t, int s, const std::vector<double>& w) {
    BeliefKey key{t, s, {}};
    key.q.reserve(w.size());
    for (double x : w) key.q.push_back(std::llround(x * 1e12));
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    if (++nodes_ > budget_) throw BudgetError("blind planner exceeded node budget", nodes_, budget_);

    const Dims& d = model_.dims();
    Decision best{kNegInf, 0};
    std::vector<double> wo(d.contexts), w2(d.contexts);
    for (int a = 0; a < d.actions; ++a) {
      double q = 0.0;
      for (int o = 0; o < d.observations; ++o) {
        double mo = 0.0;
        for (int m = 0; m < d.contexts; ++m) {
          wo[m] = w[m] * model_.observation(m, s, a, o);
          mo += wo[m];
        }
        if (mo <= 0.0) continue;
        q += mo * model_.reward(o);
        if (t == d.horizon) continue;
        for (int s2 = 0; s2 < d.states; ++s2) {
          double m2 = 0.0;
          for (int m = 0; m < d.contexts; ++m) {
            w2[m] = wo[m] * model_.transition(m, s, a, s2);
            m2 += w2[m];
          }
          if (m2 <= 0.0) continue;
          for (double& x : w2) x /= m2;
          q += m2 * solve(t + 1, s2, w2).value;
        }
      }
      if (a == 0 || q > best.value + kTieTol) best = {q, a};
    }
    memo_.emplace(std::move(key), best);
    return best;
  }

  // forward pass over prefixes reachable under the greedy actions
  void extract(int t, int s, const std::vector<double>& w, std::vector<int>& hist,
               BlindPolicy& out) {
    const Decision dec = solve(t, s, w);
    out.set_action(hist, dec.action);
    const Dims& d = model_.dims();
    if (t == d.horizon) return;
    const int a = dec.action;
    std::vector<double> w2(d.contexts);
    for (int o = 0; o < d.observations; ++o)
      for (int s2 = 0; s2 < d.states; ++s2) {
        double m2 = 0.0;
        for (int m = 0; m < d.contexts; ++m) {
          w2[m] = w[m] * model_.step(m, s, a, o, s2);
          m2 += w2[m];
        }
        if (m2 <= 0.0) continue;
        for (double& x : w2) x /= m2;
        hist.insert(hist.end(), {a, o, s2});
        extract(t + 1, s2, w2, hist, out);
        hist.resize(hist.size() - 3);
      }
  }

  PlanResult plan(std::span<const double> weights) {
    const Dims& d = model_.dims();
    PlanResult res{BlindPolicy(d.actions), 0.0, 0.0};
    std::vector<double> w(d.contexts);
    for (int s = 0; s < d.states; ++s) {
      double mass = 0.0;
      for (int m = 0; m < d.contexts; ++m) {
        w[m] = weights[m] * model_.initial(m, s);
        mass += w[m];
      }
      if (mass <= 0.0) continue;
      for (double& x : w) x /= mass;
      res.value += mass * solve(1, s, w).value;
      std::vector<int> hist{s};
      extract(1, s, w, hist, res.policy);
    }
    res.nodes = nodes_;
    return res;
  }

 private:
  const LmdpPsi& model_;
  double budget_;
  double nodes_ = 0.0;
  std::unordered_map<BeliefKey, Decision, BeliefKeyHash> memo_;
};

}  // namespace

PlanResult plan_from_weights(const LmdpPsi& model, std::span<const double> weights,
                             const PlannerOptions& opts) {
  if (opts.access == HistoryAccess::kStatesOnly) {
    // belief states are not sufficient when observations are hidden from the policy
    throw ConfigError("belief planner requires full-history access; use the enumeration oracle");
  }
  BeliefPlanner planner(model, opts.budget);
  return planner.plan(weights);
}

PlanResult plan_blind_optimal(const LmdpPsi& model, const PlannerOptions& opts) {
  if (opts.access == HistoryAccess::kStatesOnly) {
    auto r = enumerate_policies_oracle(model, PolicyClass::kBlind, Objective::kValue, nullptr,
                                       opts.budget, opts.access);
    return {r.policy.for_symbol(0), r.value, r.policies_checked};
  }
  std::vector<double> w(model.mixing().begin(), model.mixing().end());
  return plan_from_weights(model, w, opts);
}

InformedPlanResult plan_informed_optimal(const LmdpPsi& model, const PlannerOptions& opts) {
  if (opts.access == HistoryAccess::kStatesOnly) {
    auto r = enumerate_policies_oracle(model, PolicyClass::kInformed, Objective::kValue, nullptr,
                                       opts.budget, opts.access);
    InformedPlanResult out{r.policy, r.value, {}};
    return out;
  }
  const Dims& d = model.dims();
  BeliefPlanner planner(model, opts.budget);
  std::vector<BlindPolicy> per;
  InformedPlanResult out;
  per.reserve(d.symbols);
  out.per_symbol.assign(d.symbols, 0.0);
  for (int i = 0; i < d.symbols; ++i) {
    auto w = symbol_weights(model, i);
    double mass = 0.0;
    for (double x : w) mass += x;
    if (mass <= 0.0) {
      per.emplace_back(d.actions);
      continue;
    }
    auto r = planner.plan(w);
    out.per_symbol[i] = r.value;
    out.value += r.value;
    per.push_back(std::move(r.policy));
  }
  out.policy = InformedPolicy(std::move(per));
  return out;
}

namespace {

class BonusTree {
 public:
  BonusTree(const BonusSpec& spec, double budget) : spec_(spec), budget_(budget) {
    const Dims& d = spec.model.dims();
    const double size = std::pow(double(d.states) * d.actions * d.observations, d.horizon);
    if (size > budget) throw BudgetError("bonus planner history tree too large", size, budget);
    if (!(spec.bonus.dims() == d)) throw ConfigError("bonus accumulator does not match the model");
  }

  // policy == nullptr: maximize and record decisions; otherwise evaluate the policy
  double visit(int t, int s, const Eigen::VectorXd& b, double mass, std::vector<int>& hist,
               const BlindPolicy* policy) {
    if (++nodes_ > budget_) throw BudgetError("bonus planner exceeded node budget", nodes_, budget_);
    const Dims& d = spec_.model.dims();
    const Eigen::VectorXd b_bar = b / mass;
    std::span<const double> dist;
    if (policy) dist = policy->at(hist);
    double best = kNegInf, total = 0.0;
    int best_a = 0;
    Eigen::VectorXd b2;
    for (int a = 0; a < d.actions; ++a) {
      if (policy && dist[a] <= 0.0) continue;
      double q = spec_.bonus.bonus(t, s, a, b_bar);
      if (t < d.horizon) {
        for (int o = 0; o < d.observations; ++o)
          for (int s2 = 0; s2 < d.states; ++s2) {
            b2.noalias() = spec_.ops.op(s, a, o, s2) * b;
            clamp_small_negatives(b2);
            const double m2 = b2.sum();
            if (!(m2 > 1e-300)) continue;
            hist.insert(hist.end(), {a, o, s2});
            q += (m2 / mass) * visit(t + 1, s2, b2, m2, hist, policy);
            hist.resize(hist.size() - 3);
          }
      }
      if (policy) {
        total += dist[a] * q;
      } else if (a == 0 || q > best + kTieTol) {
        best = q;
        best_a = a;
      }
    }
    if (policy) return total;
    decisions_[hist] = best_a;
    return best;
  }

  double run(const BlindPolicy* policy) {
    const Dims& d = spec_.model.dims();
    double total = 0.0;
    for (int s = 0; s < d.states; ++s) {
      Eigen::VectorXd b = spec_.ops.entry(s) * spec_.ops.b0();
      clamp_small_negatives(b);
      const double mass = b.sum();
      if (!(mass > 1e-300)) continue;
      std::vector<int> hist{s};
      total += mass * visit(1, s, b, mass, hist, policy);
    }
    return total;
  }

  void extract(int t, int s, const Eigen::VectorXd& b, std::vector<int>& hist, BlindPolicy& out) {
    const int a = decisions_.at(hist);
    out.set_action(hist, a);
    const Dims& d = spec_.model.dims();
    if (t == d.horizon) return;
    Eigen::VectorXd b2;
    for (int o = 0; o < d.observations; ++o)
      for (int s2 = 0; s2 < d.states; ++s2) {
        b2.noalias() = spec_.ops.op(s, a, o, s2) * b;
        clamp_small_negatives(b2);
        if (!(b2.sum() > 1e-300)) continue;
        hist.insert(hist.end(), {a, o, s2});
        extract(t + 1, s2, b2, hist, out);
        hist.resize(hist.size() - 3);
      }
  }

  BlindPolicy policy() {
    const Dims& d = spec_.model.dims();
    BlindPolicy out(d.actions);
    for (int s = 0; s < d.states; ++s) {
      Eigen::VectorXd b = spec_.ops.entry(s) * spec_.ops.b0();
      clamp_small_negatives(b);
      if (!(b.sum() > 1e-300)) continue;
      std::vector<int> hist{s};
      extract(1, s, b, hist, out);
    }
    return out;
  }

  double nodes() const { return nodes_; }

 private:
  const BonusSpec& spec_;
  double budget_;
  double nodes_ = 0.0;
  std::map<std::vector<int>, int> decisions_;
};

}  // namespace

PlanResult plan_bonus_optimal(const BonusSpec& spec, double budget) {
  BonusTree tree(spec, budget);
  PlanResult res;
  res.value = tree.run(nullptr);
  res.policy = tree.policy();
  res.nodes = tree.nodes();
  return res;
}

double evaluate_bonus(const BonusSpec& spec, const BlindPolicy& policy, double budget) {
  BonusTree tree(spec, budget);
  return tree.run(&policy);
}

double evaluate_policy(const LmdpPsi& model, const InformedPolicy& policy, Objective objective,
                       const BonusSpec* bonus, double budget) {
  if (objective == Objective::kValue) return value_of_policy(model, policy, budget);
  if (!bonus) throw ConfigError("bonus objective needs a BonusSpec");
  if (!policy.blind()) throw ConfigError("bonus objective is defined for blind policies only");
  return evaluate_bonus(*bonus, policy.for_symbol(0), std::min(budget, kBonusTreeBudget));
}

namespace {

// Odometer over deterministic policies that only assign actions to the
// decision keys they reach themselves.
class PolicyEnumerator {
 public:
  PolicyEnumerator(const LmdpPsi& model, std::span<const double> weights, HistoryAccess access)
      : model_(model), weights_(weights.begin(), weights.end()), access_(access),
        proto_(model.num_actions(), access) {
    discover();
  }

  BlindPolicy current() const {
    BlindPolicy p(model_.num_actions(), access_);
    for (std::size_t i = 0; i < order_.size(); ++i) p.set_action(witness_[i], choice_.at(order_[i]));
    return p;
  }

  bool next() {
    const int n_act = model_.num_actions();
    int i = static_cast<int>(order_.size()) - 1;
    while (i >= 0 && choice_.at(order_[i]) == n_act - 1) --i;
    if (i < 0) return false;
    std::map<std::vector<int>, int> kept;
    for (int j = 0; j <= i; ++j) kept[order_[j]] = choice_.at(order_[j]);
    kept[order_[i]] += 1;
    choice_ = std::move(kept);
    discover();
    return true;
  }

 private:
  void discover() {
    order_.clear();
    witness_.clear();
    std::set<std::vector<int>> seen;
    const Dims& d = model_.dims();
    std::vector<double> w(d.contexts);
    for (int s = 0; s < d.states; ++s) {
      double mass = 0.0;
      for (int m = 0; m < d.contexts; ++m) {
        w[m] = weights_[m] * model_.initial(m, s);
        mass += w[m];
      }
      if (mass <= 0.0) continue;
      std::vector<int> hist{s};
      walk(1, s, w, hist, seen);
    }
  }

  void walk(int t, int s, const std::vector<double>& w, std::vector<int>& hist,
            std::set<std::vector<int>>& seen) {
    auto key = proto_.key(hist);
    if (seen.insert(key).second) {
      order_.push_back(key);
      witness_.push_back(hist);
    }
    auto [it, fresh] = choice_.try_emplace(key, 0);
    const int a = it->second;
    const Dims& d = model_.dims();
    if (t == d.horizon) return;
    std::vector<double> w2(d.contexts);
    for (int o = 0; o < d.observations; ++o)
      for (int s2 = 0; s2 < d.states; ++s2) {
        double m2 = 0.0;
        for (int m = 0; m < d.contexts; ++m) {
          w2[m] = w[m] * model_.step(m, s, a, o, s2);
          m2 += w2[m];
        }
        if (m2 <= 0.0) continue;
        hist.insert(hist.end(), {a, o, s2});
        walk(t + 1, s2, w2, hist, seen);
        hist.resize(hist.size() - 3);
      }
  }

  const LmdpPsi& model_;
  std::vector<double> weights_;
  HistoryAccess access_;
  BlindPolicy proto_;
  std::map<std::vector<int>, int> choice_;
  std::vector<std::vector<int>> order_;
  std::vector<std::vector<int>> witness_;
};

struct BlindSearch {
  BlindPolicy policy;
  double value = kNegInf;
  double checked = 0.0;
};

BlindSearch search_blind(const LmdpPsi& model, std::span<const double> weights,
                         HistoryAccess access, Objective objective, const BonusSpec* bonus,
                         double max_policies, double already) {
  BlindSearch out;
  PolicyEnumerator en(model, weights, access);
  do {
    if (already + out.checked + 1 > max_policies)
      throw BudgetError("policy enumeration exceeds budget", already + out.checked + 1,
                        max_policies);
    ++out.checked;
    BlindPolicy p = en.current();
    const double v = objective == Objective::kValue ? expected_return(model, p, weights)
                                                    : evaluate_bonus(*bonus, p);
    if (v > out.value) {
      out.value = v;
      out.policy = std::move(p);
    }
  } while (en.next());
  return out;
}

}  // namespace

OracleResult enumerate_policies_oracle(const LmdpPsi& model, PolicyClass cls, Objective objective,
                                       const BonusSpec* bonus, double max_policies,
                                       HistoryAccess access) {
  if (objective == Objective::kBonus) {
    if (!bonus) throw ConfigError("bonus objective needs a BonusSpec");
    if (cls != PolicyClass::kBlind) throw ConfigError("bonus objective is blind-only");
  }
  OracleResult out;
  if (cls == PolicyClass::kBlind) {
    std::vector<double> w(model.mixing().begin(), model.mixing().end());
    auto r = search_blind(model, w, access, objective, bonus, max_policies, 0.0);
    out.policy = InformedPolicy::ignoring_side_info(std::move(r.policy));
    out.value = r.value;
    out.policies_checked = r.checked;
    return out;
  }
  std::vector<BlindPolicy> per;
  for (int i = 0; i < model.num_symbols(); ++i) {
    auto w = symbol_weights(model, i);
    double mass = 0.0;
    for (double x : w) mass += x;
    if (mass <= 0.0) {
      per.emplace_back(model.num_actions(), access);
      continue;
    }
    auto r = search_blind(model, w, access, objective, bonus, max_policies, out.policies_checked);
    out.value += r.value;
    out.policies_checked += r.checked;
    per.push_back(std::move(r.policy));
  }
  out.policy = InformedPolicy(std::move(per));
  return out;
}

}  // namespace lmdp
