#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lmdp/io.hpp"
#include "lmdp/learning.hpp"

namespace lmdp {

struct ExperimentConfig {
  std::string preset;       // regret-blind | explore | ete | gap-demo | scaling
  std::string instance;     // truth instance JSON (defaults to the class truth)
  std::string model_class;  // class JSON
  int K = 2000;
  std::vector<int> K_list;  // scaling preset
  double delta = 0.1;
  double epsilon = 0.1;
  double c = 0.01;
  double c_beta = 1.0;
  double c_split = 1.0;
  int episode_cap = 50000;
  double planner_budget = 1e7;
  HistoryAccess access = HistoryAccess::kFull;
  std::vector<std::uint64_t> seeds;
  std::string output;
};

/// Parses a config document; relative paths resolve against `base_dir`.
ExperimentConfig config_from_json(const Json& j, const std::string& base_dir = ".");
Json config_to_json(const ExperimentConfig& cfg);
/// Throws ConfigError before any work is done.
void validate_config(const ExperimentConfig& cfg);

struct PresetResult {
  std::string directory;
  Json summary;
};

/// Runs a preset; writes per-seed logs, aggregate.csv and manifest.json to cfg.output.
PresetResult run_preset(const ExperimentConfig& cfg);

struct ScalingPoint {
  double K = 0.0;
  std::vector<double> per_seed;
};

struct ScalingFit {
  std::vector<std::pair<double, double>> points;  // (K, median)
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Least-squares slope of log(median) on log(K) with a seed bootstrap CI.
ScalingFit fit_scaling_exponent(const std::vector<ScalingPoint>& points, int bootstrap = 1000,
                                std::uint64_t seed = 1);

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);
double median(std::vector<double> v);

/// Slope of log cumulative regret against log episode on a log-spaced grid in [lo, hi].
double regret_slope(const RunLog& log, int lo, int hi, int grid = 10);

}  // namespace lmdp
