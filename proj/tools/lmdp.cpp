#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lmdp/fixtures.hpp"
#include "lmdp/harness.hpp"
#include "lmdp/io.hpp"
#include "lmdp/kernels.hpp"
#include "lmdp/planning.hpp"
#include "lmdp/psr.hpp"

using namespace lmdp;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;
constexpr int kExitCheck = 4;

struct Common {
  std::string instance;
  std::string model_class;
  std::string access = "full";
  std::string out;
  std::uint64_t seed = 0;
  double budget = 1e7;
};

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    write_text(path, text);
}

ModelClass load_class_or_throw(const Common& c) {
  if (c.model_class.empty()) throw ConfigError("--class is required");
  return load_class(c.model_class);
}

LmdpPsi truth_of(const Common& c, const ModelClass& cls) {
  if (!c.instance.empty()) return load_model(c.instance);
  if (!cls.truth_index) throw ConfigError("class has no truth_index; pass --instance");
  return cls.models[*cls.truth_index];
}

int cmd_simulate(const Common& c, int episodes, const std::string& policy_kind) {
  const LmdpPsi th = load_model(c.instance);
  require_valid(th);
  const PlannerOptions po{c.budget, parse_access(c.access)};
  InformedPolicy pi;
  if (policy_kind == "uniform")
    pi = InformedPolicy::ignoring_side_info(BlindPolicy::uniform(th.num_actions()));
  else if (policy_kind == "blind")
    pi = InformedPolicy::ignoring_side_info(plan_blind_optimal(th, po).policy);
  else if (policy_kind == "informed")
    pi = plan_informed_optimal(th, po).policy;
  else
    throw ConfigError("unknown policy '" + policy_kind + "'");
  if (episodes < 1) throw ConfigError("--episodes must be positive");
  const auto recs = omp::simulate_batch(th, pi, c.seed, 1, episodes);
  std::ostringstream os;
  write_trajectories_csv(os, th, recs);
  emit(c.out, os.str());
  return 0;
}

int cmd_plan(const Common& c, const std::string& kind) {
  const LmdpPsi th = load_model(c.instance);
  require_valid(th);
  const PlannerOptions po{c.budget, parse_access(c.access)};
  Json j;
  if (kind == "blind") {
    auto r = plan_blind_optimal(th, po);
    j = {{"class", "blind"}, {"value", r.value}, {"policy", policy_to_json(r.policy)}};
  } else if (kind == "informed") {
    auto r = plan_informed_optimal(th, po);
    j = {{"class", "informed"}, {"value", r.value}, {"policy", policy_to_json(r.policy)}};
  } else {
    throw ConfigError("--policy-class must be blind or informed");
  }
  std::cerr << "value " << format_double(j["value"].get<double>()) << '\n';
  emit(c.out, j.dump(1) + "\n");
  return 0;
}

int finish_run(const RunLog& log, const std::string& out) {
  if (!log.aborted.empty()) throw BudgetError(log.aborted, 0, 0);
  std::ostringstream os;
  write_runlog_csv(os, log);
  emit(out, os.str());
  std::cerr << "episodes " << log.rows.size() << ", cumulative regret "
            << format_double(log.final_regret()) << '\n';
  return 0;
}

int cmd_verify(const Common& c) {
  const LmdpPsi th = load_model(c.instance);
  const auto report = validate_model(th);
  if (!report.ok()) {
    std::cerr << report.summary() << '\n';
    return kExitCheck;
  }
  const auto E = th.emission_matrix();
  const AlphaCertificate cert = effective_alpha(E);
  const PsrOperators ops = build_operators(th);
  const Dims& d = th.dims();
  std::ostringstream os;
  os << "t,s,a,iota,measured_constant,theory_bound,pass\n";
  bool ok = true;
  for (int iota = 0; iota < d.symbols; ++iota) {
    double pmax = 0.0;
    for (int m = 0; m < d.contexts; ++m) pmax = std::max(pmax, th.emission(iota, m));
    const double bound = (d.contexts == 1 ? 1.0 : d.contexts / cert.lower) * pmax;
    for (int t = 1; t <= d.horizon; ++t)
      for (int s = 0; s < d.states; ++s)
        for (int a = 0; a < d.actions; ++a) {
          const double v = conditional_conditioning(ops, iota, t, s, a, c.budget);
          const bool pass = v <= bound + 1e-9;
          ok = ok && pass;
          os << t << ',' << s << ',' << a << ',' << iota << ',' << format_double(v) << ','
             << format_double(bound) << ',' << (pass ? 1 : 0) << '\n';
        }
  }
  emit(c.out, os.str());
  std::cerr << "alpha_eff " << format_double(cert.value) << " (lower "
            << format_double(cert.lower) << (cert.certified ? ", certified" : ", sampled")
            << ")\n";
  return ok ? 0 : kExitCheck;
}

HardInstanceSpec spec_from_flags(int M, double alpha, double eps, int alphabet) {
  HardInstanceSpec spec;
  spec.contexts = M;
  spec.alpha = alpha;
  spec.epsilon = eps;
  spec.alphabet = alphabet;
  spec.validate();
  return spec;
}

int cmd_hardgen(const Common& c, int M, double alpha, double eps, int alphabet,
                const std::string& emit_path) {
  const HardInstanceSpec spec = spec_from_flags(M, alpha, eps, alphabet);
  if (!spec.in_lower_bound_regime())
    std::cerr << "note: alpha is outside the lower-bound regime alpha < 1/(256 sqrt M)\n";
  Rng rng(c.seed);
  const EmissionAssignment asg = sample_emission_assignment(spec, rng);
  const LmdpPsi hard = build_hard_instance(spec, asg);
  const LmdpPsi ref = build_reference(spec, asg);
  if (emit_path.empty()) throw ConfigError("--emit is required");
  const std::filesystem::path p(emit_path);
  const std::string stem = (p.parent_path() / p.stem()).string();
  write_json(emit_path, model_to_json(hard));
  write_json(stem + "_reference.json", model_to_json(ref));
  write_json(stem + "_certificate.json", certificate_to_json(spec, asg));
  std::cerr << "alpha_eff " << format_double(asg.cert.value) << " after " << asg.draws
            << " draw(s)\n";
  return 0;
}

struct KlRow {
  std::string iota_class, a_class;
  double alpha, eps, kl;
};

int cmd_verify_kl(const Common& c, int M, double alpha, double eps, int alphabet) {
  HardInstanceSpec spec = spec_from_flags(M, alpha, eps, alphabet);
  Rng rng(c.seed);
  const EmissionAssignment asg = sample_emission_assignment(spec, rng);
  auto kl_at = [&](double al, double ep, bool hard_symbol, bool optimal) {
    HardInstanceSpec s = spec;
    s.alpha = al;
    s.epsilon = ep;
    const LmdpPsi p1 = build_hard_instance(s, asg);
    const LmdpPsi p0 = build_reference(s, asg);
    OpenLoopTest test;
    test.initial_action = s.explore_action(s.optimal_explore);
    test.controls = s.optimal_sequence();
    if (!optimal) test.controls.back() = test.controls.back() == s.control_action(0)
                                             ? s.control_action(1)
                                             : s.control_action(0);
    const int iota = hard_symbol ? s.hard_symbol() : s.symbol(0, 0);
    return conditional_kl(p0, p1, iota, test);
  };
  std::ostringstream os;
  os << "iota_class,a_class,alpha,eps,kl,predicted_scaling_pass\n";
  bool ok = true;
  auto row = [&](const char* ic, const char* ac, double al, double ep, double kl, bool pass) {
    ok = ok && pass;
    os << ic << ',' << ac << ',' << format_double(al) << ',' << format_double(ep) << ','
       << format_double(kl) << ',' << (pass ? 1 : 0) << '\n';
  };
  const double z = kl_at(alpha, eps, true, false);
  row("hard", "suboptimal", alpha, eps, z, z == 0.0);
  const double k1 = kl_at(alpha, eps, true, true), k2 = kl_at(alpha, eps / 2, true, true);
  const double r1 = k1 / k2;
  row("hard", "optimal", alpha, eps, k1, true);
  row("hard", "optimal", alpha, eps / 2, k2, r1 >= 3.0 && r1 <= 5.3);
  const double q1 = kl_at(alpha, eps, false, false), q2 = kl_at(alpha / 2, eps, false, false),
               q3 = kl_at(alpha, eps / 2, false, false);
  row("other", "suboptimal", alpha, eps, q1, true);
  row("other", "suboptimal", alpha / 2, eps, q2, q1 / q2 >= 3.0 && q1 / q2 <= 5.3);
  row("other", "suboptimal", alpha, eps / 2, q3, q1 / q3 >= 3.0 && q1 / q3 <= 5.3);
  emit(c.out, os.str());
  return ok ? 0 : kExitCheck;
}

std::vector<std::uint64_t> seed_list(const std::vector<std::uint64_t>& seeds, std::uint64_t one) {
  return seeds.empty() ? std::vector<std::uint64_t>{one} : seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent MDPs with prospective side information"};
  app.set_version_flag("--version", LMDP_VERSION);
  app.require_subcommand(1);
  Common c;

  auto add_common = [&](CLI::App* sub, bool instance, bool cls) {
    if (instance) sub->add_option("--instance", c.instance, "instance JSON");
    if (cls) sub->add_option("--class", c.model_class, "model class JSON");
    sub->add_option("--out", c.out, "output path ('-' for stdout)");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--planner-budget", c.budget, "node budget for exact enumeration");
  };

  int episodes = 1000;
  std::string policy_kind = "uniform";
  auto* sim = app.add_subcommand("simulate", "sample episodes and write trajectories CSV");
  add_common(sim, true, false);
  sim->add_option("--episodes", episodes);
  sim->add_option("--policy", policy_kind, "uniform | blind | informed");
  sim->add_option("--access", c.access, "full | states-only");

  std::string plan_kind = "blind";
  auto* plan = app.add_subcommand("plan", "exact optimal policy");
  add_common(plan, true, false);
  plan->add_option("--policy-class", plan_kind, "blind | informed");
  plan->add_option("--access", c.access, "full | states-only");

  int K = 1000;
  double delta = 0.1, c_beta = 1.0, eps = 0.1, knob = 1.0, c_split = 1.0;
  int cap = 50000;
  auto* omle = app.add_subcommand("omle", "optimistic MLE within blind policies");
  add_common(omle, true, true);
  omle->add_option("--K", K);
  omle->add_option("--delta", delta);
  omle->add_option("--c-beta", c_beta);
  omle->add_option("--access", c.access, "full | states-only");

  auto* explore = app.add_subcommand("explore", "bonus-driven pure exploration");
  add_common(explore, true, true);
  explore->add_option("--epsilon", eps);
  explore->add_option("--delta", delta);
  explore->add_option("--c", knob, "scaling knob on lambda0 / eps_pe");
  explore->add_option("--c-beta", c_beta);
  explore->add_option("--episode-cap", cap);

  auto* ete = app.add_subcommand("ete", "explore-then-exploit");
  add_common(ete, true, true);
  ete->add_option("--K", K);
  ete->add_option("--delta", delta);
  ete->add_option("--c", knob);
  ete->add_option("--c-beta", c_beta);
  ete->add_option("--c-split", c_split);

  int M = 8, alphabet = 64;
  double alpha = 0.003, heps = 0.04;
  std::string emit_path;
  auto* hardgen = app.add_subcommand("hardgen", "build a lower-bound instance and certificate");
  add_common(hardgen, false, false);
  hardgen->add_option("--M", M);
  hardgen->add_option("--alpha", alpha);
  hardgen->add_option("--eps", heps);
  hardgen->add_option("--alphabet", alphabet);
  hardgen->add_option("--emit", emit_path, "instance JSON path");

  auto* verify = app.add_subcommand("verify", "conditioning bounds and alpha_eff of an instance");
  add_common(verify, true, false);

  auto* verify_kl = app.add_subcommand("verify-kl", "exact conditional KL scaling checks");
  add_common(verify_kl, false, false);
  verify_kl->add_option("--M", M);
  verify_kl->add_option("--alpha", alpha);
  verify_kl->add_option("--eps", heps);
  verify_kl->add_option("--alphabet", alphabet);

  std::vector<int> K_list;
  std::vector<std::uint64_t> seeds;
  std::string outdir = "scaling_out";
  auto* scaling = app.add_subcommand("scaling", "explore-then-exploit regret exponent fit");
  add_common(scaling, true, true);
  scaling->add_option("--K-list", K_list)->required()->delimiter(',');
  scaling->add_option("--seeds", seeds)->delimiter(',');
  scaling->add_option("--delta", delta);
  scaling->add_option("--c", knob);
  scaling->add_option("--c-split", c_split);
  scaling->add_option("--outdir", outdir);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run a preset from a config JSON");
  run->add_option("config", config_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(c, episodes, policy_kind);
    if (*plan) return cmd_plan(c, plan_kind);
    if (*omle) {
      const ModelClass cls = load_class_or_throw(c);
      return finish_run(omle_regret_min(cls, truth_of(c, cls),
                                        {K, delta, c_beta, c.seed, c.budget,
                                         parse_access(c.access)}),
                        c.out);
    }
    if (*explore) {
      const ModelClass cls = load_class_or_throw(c);
      ExploreConfig ec;
      ec.epsilon = eps;
      ec.delta = delta;
      ec.c = knob;
      ec.c_beta = c_beta;
      ec.episode_cap = cap;
      ec.seed = c.seed;
      ec.planner_budget = c.budget;
      const auto res = pure_explore(cls, truth_of(c, cls), ec);
      std::cerr << "theta_hat " << res.theta_hat << (res.log.cap_hit ? " (cap hit)" : "") << '\n';
      return finish_run(res.log, c.out);
    }
    if (*ete) {
      const ModelClass cls = load_class_or_throw(c);
      return finish_run(explore_then_exploit(cls, truth_of(c, cls),
                                             {K, delta, knob, c_beta, c_split, std::nullopt,
                                              c.seed, c.budget}),
                        c.out);
    }
    if (*hardgen) return cmd_hardgen(c, M, alpha, heps, alphabet, emit_path);
    if (*verify) return cmd_verify(c);
    if (*verify_kl) return cmd_verify_kl(c, M, alpha, heps, alphabet);
    if (*scaling) {
      ExperimentConfig cfg;
      cfg.preset = "scaling";
      cfg.model_class = c.model_class;
      cfg.instance = c.instance;
      cfg.K_list = K_list;
      cfg.delta = delta;
      cfg.c = knob;
      cfg.c_split = c_split;
      cfg.seeds = seed_list(seeds, c.seed);
      cfg.output = outdir;
      cfg.planner_budget = c.budget;
      const auto res = run_preset(cfg);
      std::cout << res.summary.dump(1) << '\n';
      return 0;
    }
    if (*run) {
      const Json j = read_json(config_path);
      const auto base = std::filesystem::path(config_path).parent_path().string();
      const auto res = run_preset(config_from_json(j, base.empty() ? "." : base));
      std::cout << res.summary.dump(1) << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const BudgetError& e) {
    std::cerr << "budget error: " << e.what() << '\n';
    return kExitBudget;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
