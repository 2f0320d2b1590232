#include "lmdp/learning.hpp"

#include <cmath>
#include <map>
#include <unordered_map>

#include "lmdp/hardgen.hpp"
#include "lmdp/kernels.hpp"

namespace lmdp {

BonusAccumulator::BonusAccumulator(const Dims& dims, double lambda0)
    : dims_(dims), lambda0_(lambda0) {
  if (!(lambda0 > 0.0)) throw ConfigError("lambda0 must be positive");
  reset();
}

void BonusAccumulator::reset() {
  const std::size_t n = static_cast<std::size_t>(dims_.horizon) * dims_.states * dims_.actions;
  const int k = dims_.symbols;
  gram_.assign(n, lambda0_ * Eigen::MatrixXd::Identity(k, k));
  inv_.assign(n, Eigen::MatrixXd::Identity(k, k) / lambda0_);
  counts_.assign(n, 0);
  dirty_.assign(n, false);
}

void BonusAccumulator::add(int t, int s, int a, const Eigen::VectorXd& feature, double weight) {
  const std::size_t i = idx(t, s, a);
  gram_[i].noalias() += weight * feature * feature.transpose();
  counts_[i] += static_cast<int>(weight);
  dirty_[i] = true;
}

void BonusAccumulator::refresh_inverses() {
  const int k = dims_.symbols;
  for (std::size_t i = 0; i < gram_.size(); ++i) {
    if (!dirty_[i]) continue;
    inv_[i] = gram_[i].llt().solve(Eigen::MatrixXd::Identity(k, k));
    dirty_[i] = false;
  }
}

double BonusAccumulator::bonus(int t, int s, int a, const Eigen::VectorXd& b_bar) const {
  const double q = b_bar.dot(inverse(t, s, a) * b_bar);
  return std::sqrt(std::max(q, 0.0));
}

double BonusAccumulator::max_inverse_residual() const {
  double worst = 0.0;
  const int k = dims_.symbols;
  for (std::size_t i = 0; i < gram_.size(); ++i)
    worst = std::max(worst,
                     (gram_[i] * inv_[i] - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff());
  return worst;
}

double BonusAccumulator::min_eigenvalue() const {
  double lo = kInf;
  for (const auto& g : gram_) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
  }
  return lo;
}

void Dataset::append(EpisodeRecord rec) {
  const auto& steps = rec.traj.steps;
  for (int t = 1; t <= static_cast<int>(steps.size()); ++t) {
    auto key = history_prefix(steps, t);
    key.push_back(steps[t - 1].action);
    ++prefix_counts_[key];
  }
  records_.push_back(std::move(rec));
}

double loglikelihood(const LmdpPsi& model, int iota, std::span<const Step> steps) {
  const Dims& d = model.dims();
  if (static_cast<int>(steps.size()) != d.horizon) throw ConfigError("trajectory length != H");
  std::vector<double> terms(d.contexts, kNegInf);
  for (int m = 0; m < d.contexts; ++m) {
    double w = model.mixing(m) * model.emission(iota, m) * model.initial(m, steps[0].state);
    if (w <= 0.0) continue;
    double lw = std::log(w);
    bool dead = false;
    for (int t = 0; t < d.horizon && !dead; ++t) {
      const Step& st = steps[t];
      double p = model.observation(m, st.state, st.action, st.obs);
      if (t + 1 < d.horizon) p *= model.transition(m, st.state, st.action, steps[t + 1].state);
      if (p <= 0.0)
        dead = true;
      else
        lw += std::log(p);
    }
    if (!dead) terms[m] = lw;
  }
  return log_sum_exp(terms);
}

double confidence_beta(double episodes, int class_size, double delta, double c_beta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (episodes < 1 || class_size < 1) throw ConfigError("beta needs K >= 1 and |Theta| >= 1");
  return c_beta * std::log(episodes * class_size / delta);
}

bool ConfidenceSet::contains(int i) const {
  for (int s : survivors)
    if (s == i) return true;
  return false;
}

void ConfidenceSet::refresh() {
  double best = kNegInf;
  mle = 0;
  for (int i = 0; i < static_cast<int>(loglik.size()); ++i)
    if (loglik[i] > best) {
      best = loglik[i];
      mle = i;
    }
  survivors.clear();
  for (int i = 0; i < static_cast<int>(loglik.size()); ++i)
    if (i == mle || loglik[i] >= best - beta) survivors.push_back(i);
}

void ConfidenceSet::absorb(const ModelClass& cls, const TrajectoryRecord& rec) {
  std::vector<double> ll(cls.size());
  omp::loglik_models(cls, rec, ll);
  for (int i = 0; i < cls.size(); ++i) loglik[i] += ll[i];
  refresh();
}

ConfidenceSet update_confidence_set(const ModelClass& cls, const Dataset& data, double beta) {
  ConfidenceSet cs;
  cs.beta = beta;
  cs.loglik.assign(cls.size(), 0.0);
  std::vector<double> ll(cls.size());
  for (const auto& rec : data.records()) {
    omp::loglik_models(cls, rec.traj, ll);
    for (int i = 0; i < cls.size(); ++i) cs.loglik[i] += ll[i];
  }
  cs.refresh();
  return cs;
}

void bonus_rebuild(BonusAccumulator& acc, const PsrOperators& ops, const Dataset& data) {
  acc.reset();
  for (const auto& [key, count] : data.prefix_counts()) {
    std::span<const int> prefix(key.data(), key.size() - 1);
    const PsrState st = psr_state(ops, prefix);
    if (st.zero_mass()) continue;
    acc.add(st.t, prefix.back(), key.back(), *st.b_bar, count);
  }
  acc.refresh_inverses();
}

AlgorithmConstants explore_constants(int contexts, int horizon, double alpha, double epsilon,
                                     double beta, double c) {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(c > 0.0 && c <= 1.0)) throw ConfigError("scale c must lie in (0, 1]");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  const double m2 = double(contexts) * contexts;
  const double h = horizon;
  auto threshold = [&](double lambda0) {
    return alpha * epsilon / (10.0 * h * m2 * std::sqrt(lambda0 * m2 / (alpha * alpha) + beta));
  };
  AlgorithmConstants k{};
  k.beta = beta;
  k.lambda0_theory = beta * m2 * h * h / (alpha * alpha);
  k.eps_pe_theory = threshold(k.lambda0_theory);
  k.lambda0 = c * k.lambda0_theory;
  k.eps_pe = threshold(k.lambda0) / (c * c);
  return k;
}

namespace {

InformedPolicy as_informed(const BlindPolicy& p) { return InformedPolicy::ignoring_side_info(p); }

struct TruthValues {
  const LmdpPsi& truth;
  double budget;
  std::unordered_map<std::uint64_t, double> cache;

  double blind(const BlindPolicy& p) {
    const auto h = p.hash();
    if (auto it = cache.find(h); it != cache.end()) return it->second;
    const double v = value_of_policy(truth, as_informed(p), budget);
    cache.emplace(h, v);
    return v;
  }
};

}  // namespace

RunLog omle_regret_min(const ModelClass& cls, const LmdpPsi& truth, const OmleConfig& cfg) {
  cls.check();
  if (!(truth.dims() == cls.dims())) throw ConfigError("truth does not share the class spaces");
  if (cfg.K < 1) throw ConfigError("K must be at least 1");
  RunLog log;
  log.access = cfg.access;
  log.constants.beta = confidence_beta(cfg.K, cls.size(), cfg.delta, cfg.c_beta);
  log.constants.c_beta = cfg.c_beta;

  const PlannerOptions popts{cfg.planner_budget, cfg.access};
  std::vector<PlanResult> plans;
  double v_star = 0.0;
  try {
    for (const auto& m : cls.models) plans.push_back(plan_blind_optimal(m, popts));
    v_star = plan_blind_optimal(truth, popts).value;
  } catch (const BudgetError& e) {
    log.aborted = e.what();
    return log;
  }

  TruthValues tv{truth, cfg.planner_budget, {}};
  ConfidenceSet cs;
  cs.beta = log.constants.beta;
  cs.loglik.assign(cls.size(), 0.0);
  cs.refresh();
  Dataset data;
  double cum = 0.0;
  for (int k = 1; k <= cfg.K; ++k) {
    int pick = cs.survivors.front();
    for (int i : cs.survivors)
      if (plans[i].value > plans[pick].value) pick = i;
    const BlindPolicy& pi = plans[pick].policy;
    double inst;
    try {
      inst = v_star - tv.blind(pi);
    } catch (const BudgetError& e) {
      log.aborted = e.what();
      return log;
    }
    cum += inst;
    Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(k));
    auto rec = sample_episode(truth, as_informed(pi), rng);
    const double reward = total_reward(truth, rec);
    cs.absorb(cls, rec);
    data.append({rec, pi.hash()});

    RunRow row;
    row.episode = k;
    row.phase = "omle";
    row.model_index = pick;
    row.policy_hash = pi.hash();
    row.value = plans[pick].value;
    row.inst_regret = inst;
    row.cum_regret = cum;
    row.survivors = static_cast<int>(cs.survivors.size());
    row.truth_survives = cls.truth_index ? int(cs.contains(*cls.truth_index)) : -1;
    row.realized_reward = reward;
    log.rows.push_back(std::move(row));
  }
  log.theta_hat = cs.mle;
  return log;
}

ExploreResult pure_explore(const ModelClass& cls, const LmdpPsi& truth, const ExploreConfig& cfg) {
  cls.check();
  if (!(truth.dims() == cls.dims())) throw ConfigError("truth does not share the class spaces");
  if (cfg.episode_cap < 0) throw ConfigError("episode cap must be non-negative");
  const Dims& d = cls.dims();
  double alpha = cfg.alpha ? *cfg.alpha : effective_alpha(truth.emission_matrix()).value;
  // a single context separates nothing; the formulas then use alpha = 1
  if (std::isinf(alpha)) alpha = 1.0;
  const double beta = confidence_beta(cfg.beta_episodes ? *cfg.beta_episodes
                                                        : std::max(1, cfg.episode_cap),
                                      cls.size(), cfg.delta, cfg.c_beta);
  const auto k = explore_constants(d.contexts, d.horizon, alpha, cfg.epsilon, beta, cfg.c);

  ExploreResult out;
  RunLog& log = out.log;
  log.constants = {beta, alpha, k.lambda0_theory, k.lambda0, k.eps_pe_theory, k.eps_pe,
                   cfg.epsilon, cfg.c, cfg.c_beta};

  std::vector<std::optional<PsrOperators>> ops(cls.size());
  auto operators = [&](int i) -> const PsrOperators& {
    if (!ops[i]) ops[i] = build_operators(cls.models[i]);
    return *ops[i];
  };

  TruthValues tv{truth, cfg.planner_budget, {}};
  double v_star;
  try {
    v_star = plan_informed_optimal(truth, {cfg.planner_budget, HistoryAccess::kFull}).value;
  } catch (const BudgetError& e) {
    log.aborted = e.what();
    return out;
  }

  ConfidenceSet cs;
  cs.beta = beta;
  cs.loglik.assign(cls.size(), 0.0);
  cs.refresh();
  Dataset data;
  BonusAccumulator acc(d, k.lambda0);
  double cum = 0.0;
  for (int n = 0;; ++n) {
    const int mle = cs.mle;
    const PsrOperators& op = operators(mle);
    bonus_rebuild(acc, op, data);
    PlanResult plan;
    try {
      plan = plan_bonus_optimal({cls.models[mle], op, acc}, cfg.bonus_budget);
    } catch (const BudgetError& e) {
      log.aborted = e.what();
      out.theta_hat = log.theta_hat = mle;
      return out;
    }
    if (plan.value <= k.eps_pe) {
      log.stop_episode = n;
      out.theta_hat = log.theta_hat = mle;
      break;
    }
    if (n >= cfg.episode_cap) {
      log.cap_hit = true;
      log.stop_episode = n;
      out.theta_hat = log.theta_hat = mle;
      break;
    }
    const BlindPolicy& pi = plan.policy;
    double inst;
    try {
      inst = v_star - tv.blind(pi);
    } catch (const BudgetError& e) {
      log.aborted = e.what();
      out.theta_hat = log.theta_hat = mle;
      return out;
    }
    cum += inst;
    Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(n + 1));
    auto rec = sample_episode(truth, as_informed(pi), rng);
    const double reward = total_reward(truth, rec);
    cs.absorb(cls, rec);
    data.append({rec, pi.hash()});

    RunRow row;
    row.episode = n + 1;
    row.phase = "explore";
    row.model_index = mle;
    row.policy_hash = pi.hash();
    row.value = plan.value;
    row.inst_regret = inst;
    row.cum_regret = cum;
    row.survivors = static_cast<int>(cs.survivors.size());
    row.truth_survives = cls.truth_index ? int(cs.contains(*cls.truth_index)) : -1;
    row.realized_reward = reward;
    log.rows.push_back(std::move(row));
  }
  return out;
}

RunLog explore_then_exploit(const ModelClass& cls, const LmdpPsi& truth, const EteConfig& cfg) {
  if (cfg.K < 1) throw ConfigError("K must be at least 1");
  if (!(cfg.c_split > 0.0)) throw ConfigError("c_split must be positive");
  ExploreConfig ec;
  ec.epsilon = cfg.c_split * std::pow(double(cfg.K), -1.0 / 3.0);
  ec.delta = cfg.delta;
  ec.c = cfg.c;
  ec.c_beta = cfg.c_beta;
  ec.alpha = cfg.alpha;
  ec.episode_cap = cfg.K;
  ec.beta_episodes = cfg.K;
  ec.seed = cfg.seed;
  ec.planner_budget = cfg.planner_budget;
  auto res = pure_explore(cls, truth, ec);
  RunLog log = std::move(res.log);
  if (!log.aborted.empty()) return log;
  const int explored = static_cast<int>(log.rows.size());
  if (explored >= cfg.K) {
    log.exploration_consumed_all = true;
    return log;
  }
  const PlannerOptions popts{cfg.planner_budget, HistoryAccess::kFull};
  double v_star, v_hat;
  InformedPolicy pi;
  try {
    v_star = plan_informed_optimal(truth, popts).value;
    auto plan = plan_informed_optimal(cls.models[res.theta_hat], popts);
    pi = std::move(plan.policy);
    v_hat = value_of_policy(truth, pi, cfg.planner_budget);
  } catch (const BudgetError& e) {
    log.aborted = e.what();
    return log;
  }
  const double inst = v_star - v_hat;
  const std::uint64_t hash = pi.hash();
  double cum = log.final_regret();
  int survivors = static_cast<int>(cls.size());
  int truth_flag = cls.truth_index ? 1 : -1;
  if (!log.rows.empty()) {
    survivors = log.rows.back().survivors;
    truth_flag = log.rows.back().truth_survives;
  }
  for (int k = explored + 1; k <= cfg.K; ++k) {
    Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(k));
    auto rec = sample_episode(truth, pi, rng);
    cum += inst;
    RunRow row;
    row.episode = k;
    row.phase = "exploit";
    row.model_index = res.theta_hat;
    row.policy_hash = hash;
    row.value = v_hat;
    row.inst_regret = inst;
    row.cum_regret = cum;
    row.survivors = survivors;
    row.truth_survives = truth_flag;
    row.realized_reward = total_reward(truth, rec);
    log.rows.push_back(std::move(row));
  }
  return log;
}

}  // namespace lmdp
