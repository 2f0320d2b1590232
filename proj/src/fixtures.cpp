#include "lmdp/fixtures.hpp"

#include <cstdlib>

namespace lmdp {

namespace {

void set_reward_prob(LmdpPsi& th, int m, int s, int a, double p1) {
  th.observation(m, s, a, 1) = p1;
  th.observation(m, s, a, 0) = 1.0 - p1;
}

void set_move(LmdpPsi& th, int m, int s, int a, double to_zero) {
  th.transition(m, s, a, 0) = to_zero;
  th.transition(m, s, a, 1) = 1.0 - to_zero;
}

struct ContextSpec {
  double init0;
  double reward[2][2];  // [s][a] probability of observation 1
  double to_zero[2];    // [a] probability of moving to state 0
};

LmdpPsi make_m2(const ContextSpec& c0, const ContextSpec& c1, double mix0,
                const double (&emission)[3][2]) {
  LmdpPsi th(Dims{2, 2, 2, 2, 3, 3});
  th.name = "mixed-m2";
  th.reward(0) = 0.0;
  th.reward(1) = 1.0;
  th.mixing(0) = mix0;
  th.mixing(1) = 1.0 - mix0;
  const ContextSpec* cs[2] = {&c0, &c1};
  for (int m = 0; m < 2; ++m) {
    th.initial(m, 0) = cs[m]->init0;
    th.initial(m, 1) = 1.0 - cs[m]->init0;
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        set_reward_prob(th, m, s, a, cs[m]->reward[s][a]);
        set_move(th, m, s, a, cs[m]->to_zero[a]);
      }
    for (int i = 0; i < 3; ++i) th.emission(i, m) = emission[i][m];
  }
  return th;
}

constexpr ContextSpec kLeft{0.7, {{0.8, 0.2}, {0.6, 0.3}}, {0.8, 0.2}};
constexpr ContextSpec kRight{0.3, {{0.2, 0.7}, {0.3, 0.9}}, {0.6, 0.1}};
constexpr double kEmission[3][2] = {{0.6, 0.2}, {0.3, 0.3}, {0.1, 0.5}};

}  // namespace

LmdpPsi tiny_mdp_fixture() {
  LmdpPsi th(Dims{1, 2, 2, 2, 2, 3});
  th.name = "tiny-mdp";
  th.reward(0) = 0.0;
  th.reward(1) = 1.0;
  th.mixing(0) = 1.0;
  th.initial(0, 0) = 1.0;
  th.emission(0, 0) = 0.5;
  th.emission(1, 0) = 0.5;
  set_reward_prob(th, 0, 0, 0, 0.3);
  set_reward_prob(th, 0, 0, 1, 0.1);
  set_reward_prob(th, 0, 1, 0, 0.0);
  set_reward_prob(th, 0, 1, 1, 0.9);
  set_move(th, 0, 0, 0, 0.9);
  set_move(th, 0, 0, 1, 0.25);
  set_move(th, 0, 1, 0, 0.5);
  set_move(th, 0, 1, 1, 0.5);
  return th;
}

LmdpPsi mixed_m2_fixture() { return make_m2(kLeft, kRight, 0.5, kEmission); }

ModelClass mixed_m2_class() {
  ModelClass cls;
  auto add = [&](LmdpPsi th, const std::string& name) {
    th.name = name;
    cls.models.push_back(std::move(th));
  };
  {
    // right context also pays for action 0
    ContextSpec r = kRight;
    r.reward[0][0] = 0.75;
    r.reward[1][0] = 0.8;
    add(make_m2(kLeft, r, 0.5, kEmission), "optimistic-a0");
  }
  {
    // left context also pays for action 1
    ContextSpec l = kLeft;
    l.reward[0][1] = 0.85;
    l.reward[1][1] = 0.9;
    add(make_m2(l, kRight, 0.5, kEmission), "optimistic-a1");
  }
  {
    ContextSpec l = kLeft, r = kRight;
    for (auto* c : {&l, &r})
      for (auto& row : c->reward)
        for (double& p : row) p = std::min(0.95, p + 0.15);
    add(make_m2(l, r, 0.5, kEmission), "optimistic-all");
  }
  add(make_m2(kLeft, kRight, 0.8, kEmission), "mixing-skewed");
  {
    const double swapped[3][2] = {{0.2, 0.6}, {0.3, 0.3}, {0.5, 0.1}};
    add(make_m2(kLeft, kRight, 0.5, swapped), "emission-swapped");
  }
  add(mixed_m2_fixture(), "truth");
  {
    ContextSpec l = kLeft;
    l.to_zero[0] = 0.3;
    add(make_m2(l, kRight, 0.5, kEmission), "transition-shift");
  }
  {
    ContextSpec l = kLeft, r = kRight;
    l.init0 = 0.2;
    r.init0 = 0.8;
    add(make_m2(l, r, 0.5, kEmission), "initial-shift");
  }
  cls.truth_index = 5;
  return cls;
}

HardFixture hard_m8_fixture(std::uint64_t seed) {
  HardFixture f;
  f.spec.contexts = 8;
  f.spec.alpha = 0.003;
  f.spec.epsilon = 0.04;
  f.spec.alphabet = 64;
  f.spec.optimal_controls = {1, 0};
  Rng rng(seed);
  f.assignment = sample_emission_assignment(f.spec, rng);
  f.hard = build_hard_instance(f.spec, f.assignment);
  f.reference = build_reference(f.spec, f.assignment);
  f.hard.name = "hard-m8";
  f.reference.name = "hard-m8-reference";
  return f;
}

LmdpPsi random_instance(const Dims& d, Rng& rng, double sparsity) {
  LmdpPsi th(d);
  th.name = "random";
  auto fill = [&](auto&& set, int n) {
    std::vector<double> w(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      w[i] = (sparsity > 0.0 && rng.uniform() < sparsity) ? 0.0 : 0.05 + rng.uniform();
      total += w[i];
    }
    if (total == 0.0) {
      w[rng.below(n)] = 1.0;
      total = 1.0;
    }
    for (int i = 0; i < n; ++i) set(i, w[i] / total);
  };
  fill([&](int m, double v) { th.mixing(m) = v; }, d.contexts);
  for (int o = 0; o < d.observations; ++o) th.reward(o) = 2.0 * rng.uniform() - 1.0;
  for (int m = 0; m < d.contexts; ++m) {
    fill([&](int s, double v) { th.initial(m, s) = v; }, d.states);
    fill([&](int i, double v) { th.emission(i, m) = v; }, d.symbols);
    for (int s = 0; s < d.states; ++s)
      for (int a = 0; a < d.actions; ++a) {
        fill([&](int s2, double v) { th.transition(m, s, a, s2) = v; }, d.states);
        fill([&](int o, double v) { th.observation(m, s, a, o) = v; }, d.observations);
      }
  }
  return th;
}

std::string data_path(const std::string& name) {
  if (const char* dir = std::getenv("LMDP_DATA_DIR")) return std::string(dir) + "/" + name;
  return std::string(LMDP_DATA_DIR) + "/" + name;
}

}  // namespace lmdp
