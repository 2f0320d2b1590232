#include <doctest.h>

#include <cmath>

#include "lmdp/hardgen.hpp"
#include "lmdp/planning.hpp"
#include "oracle_values.hpp"
#include "support.hpp"

using namespace lmdp;

namespace {

const HardFixture& fixture() {
  static const HardFixture f = hard_m8_fixture();
  return f;
}

OpenLoopTest optimal_test(const HardInstanceSpec& s) {
  return {s.explore_action(s.optimal_explore), s.optimal_sequence()};
}

OpenLoopTest flipped_test(const HardInstanceSpec& s) {
  OpenLoopTest t = optimal_test(s);
  t.controls.back() = t.controls.back() == s.control_action(0) ? s.control_action(1) : s.control_action(0);
  return t;
}

}  // namespace

TEST_CASE("hard instances are valid models") {
  const auto& f = fixture();
  CHECK(validate_model(f.hard).ok());
  CHECK(validate_model(f.reference).ok());
  CHECK(f.hard.horizon() == f.spec.d() + 1);
  CHECK(f.hard.emission_matrix() == f.reference.emission_matrix());
}

TEST_CASE("exploit actions pay only in their own observation context") {
  const auto& f = fixture();
  const auto& s = f.spec;
  for (int m = 2 * s.d(); m < s.contexts; ++m)
    for (int a = 0; a < s.num_actions(); ++a) {
      const double r = f.hard.observation(m, HardInstanceSpec::kInit, a, 1);
      CHECK(r == (a == s.exploit_action(m - 2 * s.d()) ? 1.0 : 0.0));
    }
}

TEST_CASE("reference chain survives with probability 1 - 1/(d+1-t)") {
  const auto& f = fixture();
  const auto& s = f.spec;
  for (int m = 0; m < 2 * s.d(); ++m)
    for (int t = 1; t < s.d(); ++t)
      for (int k = 0; k < s.control_actions; ++k) {
        const int a = s.control_action(k);
        CHECK(f.hard.transition(m, s.ref_state(t), a, s.ref_state(t + 1)) ==
              doctest::Approx(1.0 - 1.0 / (s.d() + 1 - t)).epsilon(1e-15));
      }
}

TEST_CASE("the hard symbol leaves a uniform posterior on the first half") {
  const auto& f = fixture();
  const auto w = symbol_weights(f.hard, f.spec.hard_symbol());
  double z = 0.0;
  for (double x : w) z += x;
  for (int m = 0; m < f.spec.contexts; ++m)
    CHECK(w[m] / z == doctest::Approx(m < f.spec.contexts / 2 ? 2.0 / f.spec.contexts : 0.0).epsilon(1e-14));
}

TEST_CASE("terminal rewards of the reference chain are Ber(1/8)") {
  const auto& f = fixture();
  const auto& s = f.spec;
  for (int m = 0; m < 2 * s.d(); ++m)
    for (int k = 0; k < s.control_actions; ++k) {
      CHECK(f.reference.observation(m, s.ref_state(s.d()), s.control_action(k), 1) == 0.125);
      CHECK(f.reference.observation(m, s.hard_state(s.d()), s.control_action(k), 1) == 0.125);
    }
}

TEST_CASE("conditional KL matches the reference oracle") {
  const auto& f = fixture();
  const auto& s = f.spec;
  CHECK(conditional_kl(f.reference, f.hard, s.hard_symbol(), flipped_test(s)) == oracle::kKlHardSuboptimal);
  CHECK(std::abs(conditional_kl(f.reference, f.hard, s.hard_symbol(), optimal_test(s)) -
                 oracle::kKlHardOptimal) <= 1e-15);
  CHECK(std::abs(conditional_kl(f.reference, f.hard, 0, flipped_test(s)) - oracle::kKlSymbol0Suboptimal) <=
        1e-18);
}

TEST_CASE("KL vanishes off the explore action and between identical models") {
  const auto& f = fixture();
  const auto& s = f.spec;
  OpenLoopTest t = optimal_test(s);
  t.initial_action = s.explore_action(1);
  for (int iota : {0, 70, s.hard_symbol()}) {
    CHECK(conditional_kl(f.reference, f.hard, iota, t) == 0.0);
    CHECK(conditional_kl(f.hard, f.hard, iota, optimal_test(s)) == 0.0);
  }
}

TEST_CASE("KL scales as eps^2 on the optimal sequence") {
  HardInstanceSpec s = fixture().spec;
  const auto asg = fixture().assignment;
  std::vector<double> kl;
  for (double eps : {0.08, 0.04, 0.02}) {
    s.epsilon = eps;
    kl.push_back(conditional_kl(build_reference(s, asg), build_hard_instance(s, asg), s.hard_symbol(),
                                optimal_test(s)));
  }
  for (int i = 0; i + 1 < 3; ++i) {
    CHECK(kl[i] / kl[i + 1] >= 3.0);
    CHECK(kl[i] / kl[i + 1] <= 5.3);
  }
}

TEST_CASE("assignment verifier rejects a degenerate all-plus sign pattern") {
  HardInstanceSpec s;
  s.alphabet = 4;
  EmissionAssignment asg;
  asg.rows = s.contexts / 2 * s.alphabet;
  asg.cols = s.contexts / 2;
  asg.signs.assign(static_cast<std::size_t>(asg.rows) * asg.cols, 1);
  certify(s, asg);
  CHECK(asg.cert.certified);
  CHECK(asg.cert.lower < s.alpha_threshold());
}

TEST_CASE("sampler returns a certified assignment above the threshold") {
  HardInstanceSpec s;
  s.alphabet = 64;
  Rng rng(1);
  const auto asg = sample_emission_assignment(s, rng);
  CHECK(asg.cert.certified);
  CHECK(asg.cert.lower >= s.alpha_threshold());
  CHECK(asg.draws >= 1);
  CHECK(asg.draws <= 10);
}

TEST_CASE("spec validation") {
  HardInstanceSpec s;
  s.contexts = 6;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = HardInstanceSpec{};
  s.epsilon = 0.3;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = HardInstanceSpec{};
  s.optimal_controls = {0};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = HardInstanceSpec{};
  CHECK_FALSE(s.in_lower_bound_regime());
  s.alpha = 0.001;
  CHECK(s.in_lower_bound_regime());
}

TEST_CASE("informed play beats blind play on the hard fixture") {
  const auto& f = fixture();
  CHECK(plan_informed_optimal(f.hard).value - plan_blind_optimal(f.hard).value > 0.0);
}

TEST_CASE("information identity in small cases") {
  HardInstanceSpec s;
  s.alphabet = 1;
  s.optimal_controls = {1, 0};
  Rng rng(3);
  const auto asg = sample_emission_assignment(s, rng, 50);
  const LmdpPsi p0 = build_reference(s, asg), p1 = build_hard_instance(s, asg);

  SUBCASE("single episode equals the weighted conditional KL") {
    const Strategy fixed = [&](int, int, std::span<const TrajectoryRecord>) { return optimal_test(s); };
    const auto r = kl_chain_identity_check(p0, p1, fixed, 1);
    std::vector<int> all(s.num_symbols());
    for (int i = 0; i < s.num_symbols(); ++i) all[i] = i;
    CHECK(std::abs(r.lhs - weighted_symbol_kl(p0, p1, all, optimal_test(s))) <= 1e-12);
    CHECK(std::abs(r.lhs - r.rhs) <= 1e-9);
  }

  SUBCASE("never exploring gives zero on both sides") {
    const Strategy avoid = [&](int, int, std::span<const TrajectoryRecord>) {
      OpenLoopTest t = optimal_test(s);
      t.initial_action = s.explore_action(1);
      return t;
    };
    const auto r = kl_chain_identity_check(p0, p1, avoid, 2);
    CHECK(r.lhs == 0.0);
    CHECK(std::abs(r.rhs) <= 1e-12);
  }

  SUBCASE("K above three is refused") {
    const Strategy fixed = [&](int, int, std::span<const TrajectoryRecord>) { return optimal_test(s); };
    CHECK_THROWS_AS(kl_chain_identity_check(p0, p1, fixed, 4), ConfigError);
  }
}
