#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lmdp/fixtures.hpp"
#include "lmdp/harness.hpp"

using namespace lmdp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lmdp_test_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<ScalingPoint> power_law(double exponent, double scale) {
  std::vector<ScalingPoint> pts;
  for (double K : {1000.0, 2000.0, 5000.0, 10000.0, 20000.0}) {
    const double v = scale * std::pow(K, exponent);
    pts.push_back({K, {v, v, v}});
  }
  return pts;
}

ExperimentConfig regret_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.preset = "regret-blind";
  cfg.model_class = data_path("mixed_m2_class.json");
  cfg.K = 200;
  cfg.seeds = {1, 2, 3};
  cfg.output = out.string();
  return cfg;
}

}  // namespace

TEST_CASE("scaling fit recovers exact exponents") {
  const auto two_thirds = fit_scaling_exponent(power_law(2.0 / 3.0, 3.0));
  CHECK(std::abs(two_thirds.slope - 2.0 / 3.0) <= 1e-6);
  CHECK(std::abs(two_thirds.intercept - std::log(3.0)) <= 1e-6);
  CHECK(two_thirds.ci_low <= two_thirds.slope + 1e-9);
  CHECK(two_thirds.ci_high >= two_thirds.slope - 1e-9);
  CHECK(std::abs(fit_scaling_exponent(power_law(0.5, 1.0)).slope - 0.5) <= 1e-6);
}

TEST_CASE("scaling fit needs four points") {
  auto pts = power_law(0.5, 1.0);
  pts.resize(3);
  CHECK_THROWS_AS(fit_scaling_exponent(pts), ConfigError);
}

TEST_CASE("median and log-log slope") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(std::abs(loglog_slope({1, 10, 100}, {2, 20, 200}) - 1.0) <= 1e-12);
}

TEST_CASE("config validation rejects bad inputs before any work") {
  ExperimentConfig cfg = regret_config(scratch("bad"));
  SUBCASE("no seeds") {
    cfg.seeds.clear();
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  }
  SUBCASE("repeated seeds") {
    cfg.seeds = {1, 1};
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  }
  SUBCASE("unknown preset") {
    cfg.preset = "nope";
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  }
  SUBCASE("delta out of range") {
    cfg.delta = 1.0;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  }
  SUBCASE("planner budget above the ceiling") {
    cfg.planner_budget = 1e12;
    CHECK_THROWS_AS(validate_config(cfg), BudgetError);
    CHECK_THROWS_AS(run_preset(cfg), BudgetError);
    CHECK_FALSE(fs::exists(cfg.output));
  }
  SUBCASE("scaling needs a K list") {
    cfg.preset = "scaling";
    cfg.K_list = {100, 200};
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  }
}

TEST_CASE("config JSON round trip") {
  ExperimentConfig cfg = regret_config("out");
  cfg.K_list = {10, 20, 30, 40};
  cfg.access = HistoryAccess::kStatesOnly;
  const Json j = config_to_json(cfg);
  const ExperimentConfig back = config_from_json(j, ".");
  CHECK(config_to_json(back) == j);
}

TEST_CASE("gap demo writes a manifest and reports the gap") {
  const fs::path out = scratch("gap");
  ExperimentConfig cfg;
  cfg.preset = "gap-demo";
  cfg.seeds = {1};
  cfg.output = out.string();
  const auto res = run_preset(cfg);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "aggregate.csv"));
  CHECK(res.summary["gap"].get<double>() > 0.1);
  const Json manifest = Json::parse(slurp(out / "manifest.json"));
  CHECK(manifest.contains("config_hash"));
  CHECK(manifest["outputs"].contains("aggregate.csv"));
}

TEST_CASE("preset runs are reproducible and aggregates match the logs") {
  const fs::path a = scratch("rep_a"), b = scratch("rep_b");
  ExperimentConfig cfg = regret_config(a);
  run_preset(cfg);
  cfg.output = b.string();
  run_preset(cfg);
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    if (name == "manifest.json") continue;
    CHECK_MESSAGE(slurp(entry.path()) == slurp(b / name), name.string());
  }
  // manifests differ only in the output directory
  Json ma = Json::parse(slurp(a / "manifest.json")), mb = Json::parse(slurp(b / "manifest.json"));
  CHECK(ma["outputs"] == mb["outputs"]);
  CHECK(ma["summary"] == mb["summary"]);

  // final cumulative regret in aggregate.csv equals the last runlog row
  std::ifstream agg(a / "aggregate.csv");
  std::string line;
  std::getline(agg, line);
  int rows = 0;
  while (std::getline(agg, line)) {
    std::istringstream ls(line);
    std::string seed, final_cum;
    std::getline(ls, seed, ',');
    std::getline(ls, final_cum, ',');
    std::ifstream log(a / ("runlog_seed" + seed + ".csv"));
    std::string header, row, last;
    std::getline(log, header);
    while (std::getline(log, row))
      if (!row.empty()) last = row;
    std::vector<std::string> cols, names;
    std::istringstream hs(header), rs(last);
    for (std::string c; std::getline(hs, c, ',');) names.push_back(c);
    for (std::string c; std::getline(rs, c, ',');) cols.push_back(c);
    REQUIRE(cols.size() == names.size());
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == "cum_regret") CHECK(std::stod(cols[i]) == doctest::Approx(std::stod(final_cum)));
    ++rows;
  }
  CHECK(rows == 3);
}
