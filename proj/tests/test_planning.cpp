#include <doctest.h>

#include <cmath>

#include "lmdp/io.hpp"
#include "lmdp/planning.hpp"
#include "oracle_values.hpp"
#include "support.hpp"

using namespace lmdp;

TEST_CASE("planner values match the reference oracle") {
  CHECK(plan_blind_optimal(tiny_mdp_fixture()).value == doctest::Approx(oracle::kTinyBlind).epsilon(1e-14));
  CHECK(plan_informed_optimal(tiny_mdp_fixture()).value ==
        doctest::Approx(oracle::kTinyInformed).epsilon(1e-14));
  CHECK(std::abs(plan_blind_optimal(mixed_m2_fixture()).value - oracle::kMixedBlind) <= 1e-12);
  CHECK(std::abs(plan_informed_optimal(mixed_m2_fixture()).value - oracle::kMixedInformed) <= 1e-12);
  const auto hard = hard_m8_fixture().hard;
  CHECK(std::abs(plan_blind_optimal(hard).value - oracle::kHardBlind) <= 1e-12);
  CHECK(std::abs(plan_informed_optimal(hard).value - oracle::kHardInformed) <= 1e-12);
}

TEST_CASE("planned value equals the evaluated value of the returned policy") {
  Rng rng(31);
  for (int k = 0; k < 5; ++k) {
    const LmdpPsi th = lmdp::testing::valid_random_instance({3, 2, 2, 2, 3, 3}, rng);
    const auto blind = plan_blind_optimal(th);
    CHECK(std::abs(value_of_policy(th, InformedPolicy::ignoring_side_info(blind.policy)) -
                   blind.value) <= 1e-10);
    CHECK(blind.policy.deterministic());
    const auto inf = plan_informed_optimal(th);
    CHECK(std::abs(value_of_policy(th, inf.policy) - inf.value) <= 1e-10);
  }
}

TEST_CASE("single context reduces to value iteration") {
  const LmdpPsi th = tiny_mdp_fixture();
  CHECK(plan_blind_optimal(th).value == doctest::Approx(lmdp::testing::mdp_value(th, 0)).epsilon(1e-14));
}

TEST_CASE("identity emission: informed value averages the per-context optima") {
  Rng rng(32);
  LmdpPsi th = random_instance({3, 2, 2, 2, 3, 3}, rng);
  lmdp::testing::set_identity_emission(th);
  double expect = 0.0;
  for (int m = 0; m < 3; ++m) expect += th.mixing(m) * lmdp::testing::mdp_value(th, m);
  CHECK(std::abs(plan_informed_optimal(th).value - expect) <= 1e-12);
}

TEST_CASE("uninformative side information adds nothing") {
  Rng rng(33);
  LmdpPsi th = random_instance({2, 2, 2, 2, 2, 3}, rng);
  for (int m = 0; m < 2; ++m) {
    th.emission(0, m) = 0.3;
    th.emission(1, m) = 0.7;
  }
  CHECK(std::abs(plan_informed_optimal(th).value - plan_blind_optimal(th).value) <= 1e-12);
}

TEST_CASE("zero rewards: every policy is optimal with value zero") {
  LmdpPsi th = mixed_m2_fixture();
  th.reward(0) = th.reward(1) = 0.0;
  CHECK(plan_blind_optimal(th).value == 0.0);
  CHECK(plan_informed_optimal(th).value == 0.0);
}

TEST_CASE("value ordering informed >= blind >= uniform") {
  Rng rng(34);
  for (int k = 0; k < 10; ++k) {
    const LmdpPsi th = lmdp::testing::valid_random_instance({2, 3, 2, 2, 3, 3}, rng);
    const double inf = plan_informed_optimal(th).value;
    const double blind = plan_blind_optimal(th).value;
    const double uni =
        value_of_policy(th, InformedPolicy::ignoring_side_info(BlindPolicy::uniform(2)));
    CHECK(inf >= blind - 1e-12);
    CHECK(blind >= uni - 1e-12);
  }
}

TEST_CASE("blind value ignores symbol relabeling") {
  LmdpPsi th = mixed_m2_fixture();
  LmdpPsi sw = th;
  for (int m = 0; m < 2; ++m) {
    sw.emission(0, m) = th.emission(2, m);
    sw.emission(2, m) = th.emission(0, m);
  }
  CHECK(plan_blind_optimal(th).value == plan_blind_optimal(sw).value);
}

TEST_CASE("exact planners agree with policy enumeration") {
  Rng rng(35);
  for (int k = 0; k < 5; ++k) {
    const LmdpPsi th = lmdp::testing::valid_random_instance({2, 2, 2, 2, 3, 2}, rng, 0.2);
    const auto ob = enumerate_policies_oracle(th, PolicyClass::kBlind, Objective::kValue);
    CHECK(std::abs(ob.value - plan_blind_optimal(th).value) <= 1e-10);
    const auto oi = enumerate_policies_oracle(th, PolicyClass::kInformed, Objective::kValue);
    CHECK(std::abs(oi.value - plan_informed_optimal(th).value) <= 1e-10);
  }
}

TEST_CASE("oracle on a single-action instance returns the unique policy") {
  Rng rng(36);
  const LmdpPsi th = lmdp::testing::valid_random_instance({2, 2, 1, 2, 2, 3}, rng);
  const auto o = enumerate_policies_oracle(th, PolicyClass::kBlind, Objective::kValue);
  CHECK(o.policies_checked == 1.0);
  CHECK(o.value == doctest::Approx(value_of_policy(
                       th, InformedPolicy::ignoring_side_info(BlindPolicy::uniform(1)))));
}

TEST_CASE("state-only access can only lose value") {
  Rng rng(37);
  const LmdpPsi th = lmdp::testing::valid_random_instance({2, 2, 2, 2, 3, 3}, rng);
  const double full = plan_blind_optimal(th).value;
  const auto restricted = plan_blind_optimal(th, {1e7, HistoryAccess::kStatesOnly});
  CHECK(restricted.value <= full + 1e-12);
  CHECK(restricted.policy.access() == HistoryAccess::kStatesOnly);
  CHECK(std::abs(value_of_policy(th, InformedPolicy::ignoring_side_info(restricted.policy)) -
                 restricted.value) <= 1e-10);
}

TEST_CASE("budget guard") {
  CHECK_THROWS_AS(plan_blind_optimal(mixed_m2_fixture(), {5.0, HistoryAccess::kFull}), BudgetError);
}

TEST_CASE("evaluate_policy handles stochastic policies") {
  const LmdpPsi th = mixed_m2_fixture();
  BlindPolicy mix(2);
  mix.set_fallback({0.25, 0.75});
  const double v = evaluate_policy(th, InformedPolicy::ignoring_side_info(mix), Objective::kValue);
  CHECK(v == doctest::Approx(value_of_policy(th, InformedPolicy::ignoring_side_info(mix))).epsilon(1e-14));
}

namespace {

LmdpPsi truncated(const LmdpPsi& th, int horizon) {
  Dims d = th.dims();
  d.horizon = horizon;
  LmdpPsi out(d);
  out.name = th.name;
  for (int m = 0; m < d.contexts; ++m) {
    out.mixing(m) = th.mixing(m);
    for (int i = 0; i < d.symbols; ++i) out.emission(i, m) = th.emission(i, m);
    for (int s = 0; s < d.states; ++s) {
      out.initial(m, s) = th.initial(m, s);
      for (int a = 0; a < d.actions; ++a) {
        for (int s2 = 0; s2 < d.states; ++s2) out.transition(m, s, a, s2) = th.transition(m, s, a, s2);
        for (int o = 0; o < d.observations; ++o) out.observation(m, s, a, o) = th.observation(m, s, a, o);
      }
    }
  }
  for (int o = 0; o < d.observations; ++o) out.reward(o) = th.reward(o);
  return out;
}

}  // namespace

TEST_CASE("bonus planning") {
  const LmdpPsi th = truncated(mixed_m2_fixture(), 2);
  const PsrOperators ops = build_operators(th);

  SUBCASE("fresh accumulator: bonus is the scaled Euclidean norm") {
    const LmdpPsi one = truncated(th, 1);
    const PsrOperators op1 = build_operators(one);
    const double lambda0 = 4.0;
    BonusAccumulator acc(one.dims(), lambda0);
    // one step: V = sum_s P(s1 = s) ||b_bar(s)||_2 / sqrt(lambda0)
    double expect = 0.0;
    for (int s = 0; s < 2; ++s) {
      const std::vector<int> prefix = {s};
      const PsrState st = psr_state(op1, prefix);
      expect += st.mass * st.b_bar->norm() / std::sqrt(lambda0);
    }
    const auto plan = plan_bonus_optimal({one, op1, acc});
    CHECK(std::abs(plan.value - expect) <= 1e-10);
  }

  SUBCASE("bonus planner agrees with enumeration and shrinks after updates") {
    BonusAccumulator acc(th.dims(), 1.0);
    const BonusSpec spec{th, ops, acc};
    const auto plan = plan_bonus_optimal(spec);
    const auto o = enumerate_policies_oracle(th, PolicyClass::kBlind, Objective::kBonus, &spec);
    CHECK(std::abs(plan.value - o.value) <= 1e-10);
    CHECK(std::abs(evaluate_bonus(spec, plan.policy) - plan.value) <= 1e-10);

    BonusAccumulator more = acc;
    const std::vector<int> prefix = {0};
    more.add(1, 0, 0, *psr_state(ops, prefix).b_bar);
    more.refresh_inverses();
    const auto after = plan_bonus_optimal({th, ops, more});
    CHECK(after.value <= plan.value + 1e-12);
    CHECK(evaluate_bonus({th, ops, more}, plan.policy) <= plan.value + 1e-12);
  }

  SUBCASE("repeated visits shrink the bonus like a rank-one update") {
    BonusAccumulator acc(th.dims(), 2.0);
    const std::vector<int> prefix = {1};
    const Eigen::VectorXd b = *psr_state(ops, prefix).b_bar;
    const int n = 25;
    for (int i = 0; i < n; ++i) acc.add(1, 1, 0, b);
    acc.refresh_inverses();
    const double nb2 = b.squaredNorm();
    CHECK(acc.bonus(1, 1, 0, b) == doctest::Approx(std::sqrt(nb2 / (2.0 + n * nb2))).epsilon(1e-12));
  }
}

TEST_CASE("policy JSON is a prefix-to-action tree with a stable hash") {
  const auto plan = plan_blind_optimal(mixed_m2_fixture());
  const Json j = policy_to_json(plan.policy);
  CHECK(j.contains("hash"));
  CHECK(j["hash"] == hex64(plan.policy.hash()));
  CHECK(plan_blind_optimal(mixed_m2_fixture()).policy.hash() == plan.policy.hash());
}
