#include "lmdp/env.hpp"

#include <cmath>
#include <sstream>

namespace lmdp {

LmdpPsi::LmdpPsi(const Dims& d) : dims_(d) {
  if (d.contexts < 1 || d.states < 1 || d.actions < 1 || d.observations < 1 || d.symbols < 1 ||
      d.horizon < 1)
    throw ConfigError("all LMDP dimensions must be positive");
  const std::size_t msa = static_cast<std::size_t>(d.contexts) * d.states * d.actions;
  trans_.assign(msa * d.states, 0.0);
  obs_.assign(msa * d.observations, 0.0);
  emis_.assign(static_cast<std::size_t>(d.contexts) * d.symbols, 0.0);
  init_.assign(static_cast<std::size_t>(d.contexts) * d.states, 0.0);
  mix_.assign(d.contexts, 0.0);
  reward_.assign(d.observations, 0.0);
}

Eigen::MatrixXd LmdpPsi::emission_matrix() const {
  Eigen::MatrixXd e(dims_.symbols, dims_.contexts);
  for (int m = 0; m < dims_.contexts; ++m)
    for (int i = 0; i < dims_.symbols; ++i) e(i, m) = emission(i, m);
  return e;
}

double total_reward(const LmdpPsi& model, const TrajectoryRecord& record) {
  double r = 0.0;
  for (const auto& st : record.steps) r += model.reward(st.obs);
  return r;
}

std::vector<int> history_prefix(std::span<const Step> steps, int t) {
  std::vector<int> h;
  h.reserve(prefix_length(t));
  for (int k = 0; k < t - 1; ++k) {
    h.push_back(steps[k].state);
    h.push_back(steps[k].action);
    h.push_back(steps[k].obs);
  }
  h.push_back(steps[t - 1].state);
  return h;
}

void ModelClass::check() const {
  if (models.empty()) throw ConfigError("model class is empty");
  for (const auto& m : models)
    if (!(m.dims() == models.front().dims()))
      throw ConfigError("model class members do not share spaces and horizon");
  if (truth_index && (*truth_index < 0 || *truth_index >= size()))
    throw ConfigError("truth_index out of range");
}

int ValidationReport::count(ValidationIssue::Kind kind) const {
  int n = 0;
  for (const auto& i : issues) n += (i.kind == kind);
  return n;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& i : issues) os << i.message << "\n";
  return os.str();
}

namespace {

constexpr double kSimplexTol = 1e-12;

void check_simplex(std::span<const double> p, const std::string& what, ValidationReport& rep) {
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      rep.issues.push_back({ValidationIssue::Kind::kSimplex, what + ": negative or non-finite entry"});
      return;
    }
    total += x;
  }
  if (std::abs(total - 1.0) > kSimplexTol) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": sums to " << total;
    rep.issues.push_back({ValidationIssue::Kind::kSimplex, os.str()});
  }
}

}  // namespace

ValidationReport validate_model(const LmdpPsi& model) {
  ValidationReport rep;
  const Dims& d = model.dims();
  check_simplex(model.mixing(), "mixing", rep);
  for (int m = 0; m < d.contexts; ++m) {
    const std::string ctx = "context " + std::to_string(m);
    check_simplex(model.initial_row(m), ctx + " initial distribution", rep);
    check_simplex(model.emission_column(m), ctx + " emission column", rep);
    for (int s = 0; s < d.states; ++s)
      for (int a = 0; a < d.actions; ++a) {
        const std::string sa = ctx + " (s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
        check_simplex(model.transition_row(m, s, a), sa + " transition row", rep);
        check_simplex(model.observation_row(m, s, a), sa + " observation row", rep);
      }
  }
  for (int o = 0; o < d.observations; ++o)
    if (!(std::abs(model.reward(o)) <= 1.0))
      rep.issues.push_back({ValidationIssue::Kind::kReward,
                            "reward of observation " + std::to_string(o) + " outside [-1, 1]"});

  if (d.symbols < d.contexts) {
    rep.issues.push_back({ValidationIssue::Kind::kRank,
                          "emission has fewer symbols than contexts, rank < M"});
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(model.emission_matrix());
    const auto& sv = svd.singularValues();
    rep.singular_values.assign(sv.data(), sv.data() + sv.size());
    const double smax = sv.size() ? sv(0) : 0.0;
    const double smin = sv.size() ? sv(sv.size() - 1) : 0.0;
    if (!(smin > 1e-10 * std::max(1.0, smax))) {
      std::ostringstream os;
      os << "emission matrix rank deficient (smallest singular value " << smin << ")";
      rep.issues.push_back({ValidationIssue::Kind::kRank, os.str()});
    }
  }
  return rep;
}

void require_valid(const LmdpPsi& model) {
  auto rep = validate_model(model);
  if (!rep.ok()) throw ModelError("invalid LMDP instance:\n" + rep.summary());
}

TrajectoryRecord sample_episode(const LmdpPsi& model, const InformedPolicy& policy, Rng& rng) {
  const Dims& d = model.dims();
  if (policy.num_actions() != d.actions) throw ConfigError("policy action count mismatch");
  TrajectoryRecord rec;
  rec.context = rng.categorical(model.mixing());
  rec.iota = rng.categorical(model.emission_column(rec.context));
  if (!policy.blind() && rec.iota >= policy.num_symbols())
    throw ConfigError("informed policy does not cover the drawn symbol");
  const BlindPolicy& pi = policy.for_symbol(rec.iota);
  int s = rng.categorical(model.initial_row(rec.context));
  std::vector<int> hist{s};
  rec.steps.reserve(d.horizon);
  for (int t = 1; t <= d.horizon; ++t) {
    const int a = rng.categorical(pi.at(hist));
    const int o = rng.categorical(model.observation_row(rec.context, s, a));
    rec.steps.push_back({s, a, o});
    if (t == d.horizon) break;
    const int s2 = rng.categorical(model.transition_row(rec.context, s, a));
    hist.insert(hist.end(), {a, o, s2});
    s = s2;
  }
  return rec;
}

double trajectory_likelihood(const LmdpPsi& model, int iota, std::span<const Step> steps) {
  const Dims& d = model.dims();
  if (static_cast<int>(steps.size()) != d.horizon) throw ConfigError("trajectory length != H");
  double total = 0.0;
  for (int m = 0; m < d.contexts; ++m) {
    double w = model.mixing(m) * model.emission(iota, m) * model.initial(m, steps[0].state);
    for (int t = 0; t < d.horizon && w > 0.0; ++t) {
      const Step& st = steps[t];
      w *= model.observation(m, st.state, st.action, st.obs);
      if (t + 1 < d.horizon) w *= model.transition(m, st.state, st.action, steps[t + 1].state);
    }
    total += w;
  }
  return total;
}

double trajectory_probability(const LmdpPsi& model, const BlindPolicy& policy, int iota,
                              std::span<const Step> steps) {
  double lik = trajectory_likelihood(model, iota, steps);
  if (lik == 0.0) return 0.0;
  std::vector<int> hist;
  for (int t = 0; t < model.horizon(); ++t) {
    hist.push_back(steps[t].state);
    lik *= policy.prob(hist, steps[t].action);
    hist.push_back(steps[t].action);
    hist.push_back(steps[t].obs);
  }
  return lik;
}

std::vector<double> symbol_marginal(const LmdpPsi& model) {
  std::vector<double> p(model.num_symbols(), 0.0);
  for (int m = 0; m < model.num_contexts(); ++m)
    for (int i = 0; i < model.num_symbols(); ++i) p[i] += model.mixing(m) * model.emission(i, m);
  return p;
}

std::vector<double> symbol_weights(const LmdpPsi& model, int iota) {
  std::vector<double> w(model.num_contexts());
  for (int m = 0; m < model.num_contexts(); ++m) w[m] = model.mixing(m) * model.emission(iota, m);
  return w;
}

namespace {

struct Evaluator {
  const LmdpPsi& model;
  const BlindPolicy& policy;
  double budget;
  double nodes = 0.0;
  std::vector<int> hist;

  double visit(int t, int s, const std::vector<double>& w) {
    if (++nodes > budget)
      throw BudgetError("policy evaluation tree exceeds node budget", nodes, budget);
    const Dims& d = model.dims();
    const auto dist = policy.at(hist);
    double total = 0.0;
    std::vector<double> wo(d.contexts), w2(d.contexts);
    for (int a = 0; a < d.actions; ++a) {
      const double pa = dist[a];
      if (pa <= 0.0) continue;
      for (int o = 0; o < d.observations; ++o) {
        double mass = 0.0;
        for (int m = 0; m < d.contexts; ++m) {
          wo[m] = w[m] * pa * model.observation(m, s, a, o);
          mass += wo[m];
        }
        if (mass <= 0.0) continue;
        total += mass * model.reward(o);
        if (t == d.horizon) continue;
        for (int s2 = 0; s2 < d.states; ++s2) {
          double m2 = 0.0;
          for (int m = 0; m < d.contexts; ++m) {
            w2[m] = wo[m] * model.transition(m, s, a, s2);
            m2 += w2[m];
          }
          if (m2 <= 0.0) continue;
          hist.insert(hist.end(), {a, o, s2});
          total += visit(t + 1, s2, w2);
          hist.resize(hist.size() - 3);
        }
      }
    }
    return total;
  }
};

}  // namespace

double expected_return(const LmdpPsi& model, const BlindPolicy& policy,
                       std::span<const double> weights, double budget) {
  const Dims& d = model.dims();
  if (policy.num_actions() != d.actions) throw ConfigError("policy action count mismatch");
  Evaluator ev{model, policy, budget, 0.0, {}};
  double total = 0.0;
  std::vector<double> w(d.contexts);
  for (int s = 0; s < d.states; ++s) {
    double mass = 0.0;
    for (int m = 0; m < d.contexts; ++m) {
      w[m] = weights[m] * model.initial(m, s);
      mass += w[m];
    }
    if (mass <= 0.0) continue;
    ev.hist.assign(1, s);
    total += ev.visit(1, s, w);
  }
  return total;
}

double value_of_policy(const LmdpPsi& model, const InformedPolicy& policy, double budget) {
  if (policy.blind()) {
    // sum over iota of p_m P(iota|m) collapses to p_m times the column sum
    std::vector<double> w(model.num_contexts());
    for (int m = 0; m < model.num_contexts(); ++m) {
      double col = 0.0;
      for (double x : model.emission_column(m)) col += x;
      w[m] = model.mixing(m) * col;
    }
    return expected_return(model, policy.for_symbol(0), w, budget);
  }
  if (policy.num_symbols() != model.num_symbols())
    throw ConfigError("informed policy symbol count mismatch");
  double total = 0.0;
  for (int i = 0; i < model.num_symbols(); ++i) {
    auto w = symbol_weights(model, i);
    double mass = 0.0;
    for (double x : w) mass += x;
    if (mass <= 0.0) continue;
    total += expected_return(model, policy.for_symbol(i), w, budget);
  }
  return total;
}

}  // namespace lmdp
