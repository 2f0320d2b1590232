#include "lmdp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lmdp/fixtures.hpp"
#include "lmdp/hardgen.hpp"
#include "lmdp/planning.hpp"

namespace fs = std::filesystem;

namespace lmdp {

namespace {

const std::set<std::string> kPresets = {"regret-blind", "explore", "ete", "gap-demo", "scaling"};

// node-count ceilings per preset
double preset_ceiling(const std::string& preset) {
  if (preset == "gap-demo") return 5e7;
  return 2e7;
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

}  // namespace

ExperimentConfig config_from_json(const Json& j, const std::string& base_dir) {
  ExperimentConfig c;
  try {
    c.preset = j.at("preset").get<std::string>();
    c.instance = resolve(base_dir, j.value("instance", std::string()));
    c.model_class = resolve(base_dir, j.value("class", std::string()));
    c.K = j.value("K", c.K);
    c.K_list = j.value("K_list", std::vector<int>{});
    c.delta = j.value("delta", c.delta);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.c = j.value("c", c.c);
    c.c_beta = j.value("c_beta", c.c_beta);
    c.c_split = j.value("c_split", c.c_split);
    c.episode_cap = j.value("episode_cap", c.episode_cap);
    c.planner_budget = j.value("planner_budget", c.planner_budget);
    c.access = parse_access(j.value("access", std::string("full")));
    if (j.contains("seeds"))
      c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    else if (j.contains("seed"))
      c.seeds = {j.at("seed").get<std::uint64_t>()};
    c.output = resolve(base_dir, j.value("output", std::string("out")));
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  validate_config(c);
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  return Json{{"preset", c.preset},   {"instance", c.instance},
              {"class", c.model_class}, {"K", c.K},
              {"K_list", c.K_list},   {"delta", c.delta},
              {"epsilon", c.epsilon}, {"c", c.c},
              {"c_beta", c.c_beta},   {"c_split", c.c_split},
              {"episode_cap", c.episode_cap}, {"planner_budget", c.planner_budget},
              {"access", to_string(c.access)}, {"seeds", c.seeds},
              {"output", c.output}};
}

void validate_config(const ExperimentConfig& c) {
  if (!kPresets.count(c.preset)) throw ConfigError("unknown preset '" + c.preset + "'");
  if (c.seeds.empty()) throw ConfigError("seed list is empty");
  if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size())
    throw ConfigError("seeds must be distinct");
  if (c.K < 1) throw ConfigError("K must be at least 1");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (!(c.c > 0.0 && c.c <= 1.0)) throw ConfigError("c must lie in (0, 1]");
  if (!(c.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(c.c_beta > 0.0)) throw ConfigError("c_beta must be positive");
  if (!(c.c_split > 0.0)) throw ConfigError("c_split must be positive");
  if (c.preset != "gap-demo" && c.model_class.empty())
    throw ConfigError("preset '" + c.preset + "' needs a model class");
  if (c.preset == "scaling" && c.K_list.size() < 4)
    throw ConfigError("scaling preset needs at least four K values");
  for (int k : c.K_list)
    if (k < 1) throw ConfigError("K_list entries must be positive");
  if (c.planner_budget > preset_ceiling(c.preset))
    throw BudgetError("planner budget above the preset ceiling", c.planner_budget,
                      preset_ceiling(c.preset));
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (xs[i] > 0.0 && ys[i] > 0.0) {
      lx.push_back(std::log(xs[i]));
      ly.push_back(std::log(ys[i]));
    }
  if (lx.size() < 2) return 0.0;
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

ScalingFit fit_scaling_exponent(const std::vector<ScalingPoint>& points, int bootstrap,
                                std::uint64_t seed) {
  if (points.size() < 4) throw ConfigError("scaling fit needs at least four points");
  ScalingFit fit;
  std::vector<double> xs, ys;
  for (const auto& p : points) {
    if (p.per_seed.empty()) throw ConfigError("scaling point without seeds");
    fit.points.push_back({p.K, median(p.per_seed)});
    xs.push_back(p.K);
    ys.push_back(fit.points.back().second);
  }
  fit.slope = loglog_slope(xs, ys);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += std::log(xs[i]) / xs.size();
    my += std::log(std::max(ys[i], 1e-300)) / xs.size();
  }
  fit.intercept = my - fit.slope * mx;

  Rng rng(seed);
  std::vector<double> slopes;
  for (int b = 0; b < bootstrap; ++b) {
    std::vector<double> yb;
    for (const auto& p : points) {
      std::vector<double> sample(p.per_seed.size());
      for (double& v : sample) v = p.per_seed[rng.below(static_cast<int>(p.per_seed.size()))];
      yb.push_back(median(sample));
    }
    slopes.push_back(loglog_slope(xs, yb));
  }
  std::sort(slopes.begin(), slopes.end());
  if (!slopes.empty()) {
    fit.ci_low = slopes[static_cast<std::size_t>(0.025 * (slopes.size() - 1))];
    fit.ci_high = slopes[static_cast<std::size_t>(0.975 * (slopes.size() - 1))];
  } else {
    fit.ci_low = fit.ci_high = fit.slope;
  }
  return fit;
}

double regret_slope(const RunLog& log, int lo, int hi, int grid) {
  std::vector<double> xs, ys;
  for (int g = 0; g < grid; ++g) {
    const double k = std::round(lo * std::pow(double(hi) / lo, double(g) / (grid - 1)));
    const int idx = static_cast<int>(k) - 1;
    if (idx < 0 || idx >= static_cast<int>(log.rows.size())) continue;
    xs.push_back(k);
    ys.push_back(log.rows[idx].cum_regret);
  }
  return loglog_slope(xs, ys);
}

namespace {

Json constants_json(const RunConstants& k) {
  return Json{{"beta", k.beta},
              {"alpha", k.alpha},
              {"lambda0_theory", k.lambda0_theory},
              {"lambda0_effective", k.lambda0},
              {"eps_pe_theory", k.eps_pe_theory},
              {"eps_pe_effective", k.eps_pe},
              {"epsilon", k.epsilon},
              {"c", k.c},
              {"c_beta", k.c_beta}};
}

struct Outputs {
  fs::path dir;
  Json files = Json::object();

  void write(const std::string& name, const std::string& text) {
    write_text((dir / name).string(), text);
    files[name] = hex64(fnv1a(text));
  }
};

std::string runlog_text(const RunLog& log) {
  std::ostringstream os;
  write_runlog_csv(os, log);
  return os.str();
}

std::string rewards_text(const RunLog& log) {
  std::ostringstream os;
  write_rewards_csv(os, log);
  return os.str();
}

}  // namespace

PresetResult run_preset(const ExperimentConfig& cfg) {
  validate_config(cfg);
  ModelClass cls;
  LmdpPsi truth;
  if (!cfg.model_class.empty()) {
    cls = load_class(cfg.model_class);
    if (!cfg.instance.empty())
      truth = load_model(cfg.instance);
    else if (cls.truth_index)
      truth = cls.models[*cls.truth_index];
    else
      throw ConfigError("no truth instance: give 'instance' or a class with truth_index");
  } else {
    truth = load_model(cfg.instance.empty() ? data_path("hard_m8.json") : cfg.instance);
  }
  require_valid(truth);

  Outputs out;
  out.dir = cfg.output;
  fs::create_directories(out.dir);
  Json summary;
  summary["preset"] = cfg.preset;
  std::ostringstream agg;

  if (cfg.preset == "gap-demo") {
    const PlannerOptions popts{cfg.planner_budget, cfg.access};
    const double blind = plan_blind_optimal(truth, popts).value;
    const double informed = plan_informed_optimal(truth, popts).value;
    agg << "blind_value,informed_value,gap\n"
        << format_double(blind) << ',' << format_double(informed) << ','
        << format_double(informed - blind) << '\n';
    summary["blind_value"] = blind;
    summary["informed_value"] = informed;
    summary["gap"] = informed - blind;
  } else if (cfg.preset == "scaling") {
    std::vector<ScalingPoint> points;
    agg << "K,seed,cum_regret,explore_episodes,theta_hat\n";
    for (int K : cfg.K_list) {
      ScalingPoint p{double(K), {}};
      for (auto seed : cfg.seeds) {
        EteConfig ec{K, cfg.delta, cfg.c, cfg.c_beta, cfg.c_split, std::nullopt, seed,
                     cfg.planner_budget};
        const RunLog log = explore_then_exploit(cls, truth, ec);
        if (!log.aborted.empty()) throw BudgetError(log.aborted, 0, cfg.planner_budget);
        p.per_seed.push_back(log.final_regret());
        agg << K << ',' << seed << ',' << format_double(log.final_regret()) << ','
            << log.stop_episode << ',' << log.theta_hat << '\n';
      }
      points.push_back(std::move(p));
    }
    const ScalingFit fit = fit_scaling_exponent(points);
    summary["slope"] = fit.slope;
    summary["ci"] = {fit.ci_low, fit.ci_high};
    Json pts = Json::array();
    for (auto [k, v] : fit.points) pts.push_back({k, v});
    summary["points"] = pts;
  } else {
    agg << "seed,final_cum_regret,stop_episode,theta_hat,cap_hit,slope\n";
    Json consts = Json::object();
    for (auto seed : cfg.seeds) {
      RunLog log;
      if (cfg.preset == "regret-blind") {
        log = omle_regret_min(cls, truth,
                              {cfg.K, cfg.delta, cfg.c_beta, seed, cfg.planner_budget, cfg.access});
      } else if (cfg.preset == "explore") {
        ExploreConfig ec;
        ec.epsilon = cfg.epsilon;
        ec.delta = cfg.delta;
        ec.c = cfg.c;
        ec.c_beta = cfg.c_beta;
        ec.episode_cap = cfg.episode_cap;
        ec.seed = seed;
        ec.planner_budget = cfg.planner_budget;
        log = pure_explore(cls, truth, ec).log;
      } else {
        log = explore_then_exploit(cls, truth,
                                   {cfg.K, cfg.delta, cfg.c, cfg.c_beta, cfg.c_split,
                                    std::nullopt, seed, cfg.planner_budget});
      }
      if (!log.aborted.empty()) throw BudgetError(log.aborted, 0, cfg.planner_budget);
      const std::string tag = "seed" + std::to_string(seed);
      out.write("runlog_" + tag + ".csv", runlog_text(log));
      out.write("rewards_" + tag + ".csv", rewards_text(log));
      const double slope =
          cfg.preset == "regret-blind" && cfg.K >= 20 ? regret_slope(log, cfg.K / 10, cfg.K) : 0.0;
      agg << seed << ',' << format_double(log.final_regret()) << ',' << log.stop_episode << ','
          << log.theta_hat << ',' << int(log.cap_hit) << ',' << format_double(slope) << '\n';
      consts[tag] = constants_json(log.constants);
    }
    summary["constants"] = consts;
  }
  out.write("aggregate.csv", agg.str());

  Json manifest;
  const Json cj = config_to_json(cfg);
  manifest["config"] = cj;
  manifest["config_hash"] = hex64(fnv1a(cj.dump()));
  manifest["code_version"] = LMDP_VERSION;
  manifest["summary"] = summary;
  manifest["outputs"] = out.files;
  write_json((out.dir / "manifest.json").string(), manifest);
  return {out.dir.string(), summary};
}

}  // namespace lmdp
