#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lmdp/io.hpp"
#include "lmdp/kernels.hpp"
#include "lmdp/learning.hpp"
#include "support.hpp"

using namespace lmdp;

namespace {

std::string csv(const RunLog& log) {
  std::ostringstream os;
  write_runlog_csv(os, log);
  return os.str();
}

Dataset collect(const LmdpPsi& th, int n, std::uint64_t seed) {
  Dataset data;
  const auto pi = InformedPolicy::ignoring_side_info(BlindPolicy::uniform(th.num_actions()));
  for (auto& rec : serial::simulate_batch(th, pi, seed, 1, n)) data.append({rec, pi.hash()});
  return data;
}

}  // namespace

TEST_CASE("confidence set basics") {
  const ModelClass cls = mixed_m2_class();
  SUBCASE("empty dataset keeps everyone") {
    const auto cs = update_confidence_set(cls, Dataset{}, 1.0);
    CHECK(cs.survivors.size() == cls.models.size());
  }
  SUBCASE("beta zero keeps only the maximizers") {
    const Dataset data = collect(cls.models[5], 40, 3);
    const auto cs = update_confidence_set(cls, data, 0.0);
    const double best = *std::max_element(cs.loglik.begin(), cs.loglik.end());
    for (int i : cs.survivors) CHECK(cs.loglik[i] == best);
    CHECK(cs.contains(cs.mle));
  }
  SUBCASE("incremental absorption equals recomputation") {
    const Dataset data = collect(cls.models[5], 30, 4);
    ConfidenceSet inc;
    inc.beta = 2.0;
    inc.loglik.assign(cls.size(), 0.0);
    for (const auto& r : data.records()) {
      const auto before = inc.loglik;
      inc.absorb(cls, r.traj);
      for (int i = 0; i < cls.size(); ++i) CHECK(inc.loglik[i] <= before[i]);
      CHECK(!inc.survivors.empty());
    }
    const auto full = update_confidence_set(cls, data, 2.0);
    CHECK(inc.survivors == full.survivors);
    for (int i = 0; i < cls.size(); ++i) CHECK(inc.loglik[i] == doctest::Approx(full.loglik[i]).epsilon(1e-12));
  }
}

TEST_CASE("impossible trajectory has -inf loglikelihood") {
  LmdpPsi th = mixed_m2_fixture();
  for (int m = 0; m < 2; ++m) {
    th.initial(m, 0) = 0.0;
    th.initial(m, 1) = 1.0;
  }
  const std::vector<Step> steps = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  CHECK(std::isinf(loglikelihood(th, 0, steps)));
}

TEST_CASE("bonus rebuild") {
  const LmdpPsi th = mixed_m2_fixture();
  const PsrOperators ops = build_operators(th);
  SUBCASE("empty dataset leaves lambda0 I") {
    BonusAccumulator acc(th.dims(), 3.0);
    bonus_rebuild(acc, ops, Dataset{});
    CHECK((acc.gram(2, 1, 0) - 3.0 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("one record matches Sherman-Morrison") {
    const Dataset data = collect(th, 1, 9);
    BonusAccumulator acc(th.dims(), 2.0);
    bonus_rebuild(acc, ops, data);
    const auto& steps = data.records()[0].traj.steps;
    const auto prefix = history_prefix(steps, 2);
    const Eigen::VectorXd b = *psr_state(ops, prefix).b_bar;
    const Eigen::MatrixXd sm = Eigen::MatrixXd::Identity(3, 3) / 2.0 -
                               b * b.transpose() / (2.0 * (2.0 + b.squaredNorm()));
    CHECK((acc.inverse(2, steps[1].state, steps[1].action) - sm).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(acc.count(2, steps[1].state, steps[1].action) == 1);
  }
  SUBCASE("inverses stay accurate and bonuses bounded") {
    const Dataset data = collect(th, 300, 10);
    const double lambda0 = 0.5;
    BonusAccumulator acc(th.dims(), lambda0);
    bonus_rebuild(acc, ops, data);
    CHECK(acc.max_inverse_residual() <= 1e-9);
    CHECK(acc.min_eigenvalue() >= lambda0 - 1e-9);
    for (const auto& r : data.records())
      for (int t = 1; t <= th.horizon(); ++t) {
        const auto prefix = history_prefix(r.traj.steps, t);
        const PsrState st = psr_state(ops, prefix);
        const double b = acc.bonus(t, r.traj.steps[t - 1].state, r.traj.steps[t - 1].action, *st.b_bar);
        CHECK(b > 0.0);
        CHECK(b <= 1.0 / std::sqrt(lambda0) + 1e-12);
      }
  }
  SUBCASE("grouped rebuild equals a per-record rebuild") {
    const Dataset data = collect(th, 50, 11);
    BonusAccumulator grouped(th.dims(), 1.0), naive(th.dims(), 1.0);
    bonus_rebuild(grouped, ops, data);
    for (const auto& r : data.records())
      for (int t = 1; t <= th.horizon(); ++t) {
        const auto prefix = history_prefix(r.traj.steps, t);
        naive.add(t, r.traj.steps[t - 1].state, r.traj.steps[t - 1].action, *psr_state(ops, prefix).b_bar);
      }
    naive.refresh_inverses();
    for (int t = 1; t <= 3; ++t)
      for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a)
          CHECK((grouped.gram(t, s, a) - naive.gram(t, s, a)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("algorithm constants follow their formulas") {
  const double beta = std::log(1000.0 * 8 / 0.1);
  CHECK(confidence_beta(1000, 8, 0.1, 1.0) == doctest::Approx(beta));
  const auto k = explore_constants(2, 3, 0.4, 0.1, beta, 1.0);
  const double lambda0 = beta * 4 * 9 / 0.16;
  CHECK(k.lambda0_theory == doctest::Approx(lambda0));
  CHECK(k.eps_pe_theory ==
        doctest::Approx(0.4 * 0.1 / (10 * 3 * 4 * std::sqrt(lambda0 * 4 / 0.16 + beta))));
  const auto scaled = explore_constants(2, 3, 0.4, 0.1, beta, 0.01);
  CHECK(scaled.lambda0 == doctest::Approx(0.01 * lambda0));
  CHECK(scaled.eps_pe ==
        doctest::Approx(0.4 * 0.1 / (10 * 3 * 4 * std::sqrt(0.01 * lambda0 * 4 / 0.16 + beta)) / 1e-4));
  CHECK_THROWS_AS(explore_constants(2, 3, 0.4, 0.1, beta, 0.0), ConfigError);
  CHECK_THROWS_AS(confidence_beta(10, 8, 1.5, 1.0), ConfigError);
}

TEST_CASE("optimistic MLE") {
  SUBCASE("single-model class has zero regret") {
    ModelClass cls;
    cls.models = {mixed_m2_fixture()};
    cls.truth_index = 0;
    const RunLog log = omle_regret_min(cls, cls.models[0], {50, 0.1, 1.0, 1, 1e7, HistoryAccess::kFull});
    for (const auto& r : log.rows) CHECK(r.inst_regret == 0.0);
  }
  SUBCASE("a model that forbids a probability-1/2 event is eliminated quickly") {
    const LmdpPsi truth = mixed_m2_fixture();
    LmdpPsi wrong = truth;
    for (int m = 0; m < 2; ++m) {
      wrong.initial(m, 0) = 0.0;
      wrong.initial(m, 1) = 1.0;
    }
    ModelClass cls;
    cls.models = {wrong, truth};
    cls.truth_index = 1;
    std::vector<double> when;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const RunLog log = omle_regret_min(cls, truth, {60, 0.1, 1.0, seed, 1e7, HistoryAccess::kFull});
      int k = 0;
      while (k < static_cast<int>(log.rows.size()) && log.rows[k].survivors == 2) ++k;
      when.push_back(k + 1);
    }
    std::sort(when.begin(), when.end());
    CHECK(0.5 * (when[9] + when[10]) <= 5.0);
  }
  SUBCASE("same seed, same log") {
    const ModelClass cls = mixed_m2_class();
    const OmleConfig cfg{200, 0.1, 1.0, 17, 1e7, HistoryAccess::kFull};
    const RunLog a = omle_regret_min(cls, cls.models[5], cfg);
    const RunLog b = omle_regret_min(cls, cls.models[5], cfg);
    CHECK(csv(a) == csv(b));
    for (const auto& r : a.rows) CHECK(r.survivors >= 1);
  }
}

TEST_CASE("pure exploration") {
  SUBCASE("generous threshold stops before any episode") {
    ModelClass cls;
    cls.models = {mixed_m2_fixture()};
    cls.truth_index = 0;
    ExploreConfig cfg;
    cfg.epsilon = 1e6;
    const auto res = pure_explore(cls, cls.models[0], cfg);
    CHECK(res.log.stop_episode == 0);
    CHECK(res.log.rows.empty());
    CHECK(res.theta_hat == 0);
  }
  SUBCASE("single context: bonuses depend only on counts and never increase") {
    ModelClass cls;
    cls.models = {tiny_mdp_fixture()};
    cls.truth_index = 0;
    ExploreConfig cfg;
    cfg.epsilon = 0.05;
    cfg.c = 0.05;
    cfg.alpha = 1.0;
    cfg.episode_cap = 400;
    const auto res = pure_explore(cls, cls.models[0], cfg);
    REQUIRE(res.log.rows.size() > 2);
    for (std::size_t i = 1; i < res.log.rows.size(); ++i)
      CHECK(res.log.rows[i].value <= res.log.rows[i - 1].value + 1e-12);
  }
  SUBCASE("cap hit is flagged") {
    const ModelClass cls = mixed_m2_class();
    ExploreConfig cfg;
    cfg.epsilon = 1e-6;
    cfg.episode_cap = 5;
    const auto res = pure_explore(cls, cls.models[5], cfg);
    CHECK(res.log.cap_hit);
    CHECK(res.log.rows.size() == 5);
    CHECK(res.log.constants.eps_pe_theory > 0.0);
  }
}

TEST_CASE("explore-then-exploit with too small K explores throughout") {
  const ModelClass cls = mixed_m2_class();
  EteConfig cfg;
  cfg.K = 20;
  cfg.c_split = 1e-6;
  const RunLog log = explore_then_exploit(cls, cls.models[5], cfg);
  CHECK(log.exploration_consumed_all);
  CHECK(log.rows.size() == 20);
}

TEST_CASE("explore-then-exploit with an immediate stop still exploits") {
  const ModelClass cls = mixed_m2_class();
  EteConfig cfg;
  cfg.K = 30;
  cfg.c_split = 1e6;
  const RunLog log = explore_then_exploit(cls, cls.models[5], cfg);
  REQUIRE(log.rows.size() == 30);
  CHECK(log.stop_episode == 0);
  CHECK(log.rows.front().phase == "exploit");
  CHECK(log.rows.front().survivors == cls.size());
}
