#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "hjlab/harness.hpp"

using namespace hjlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_1d(const std::string& potential) {
  return config_from_json(json::parse(R"({
    "name": "small",
    "dim": 1,
    "eps_list": [0.125, 0.0625, 0.03125],
    "times": [0.5],
    "spec": {"kind": "mechanical", "potential": ")" + potential + R"(", "amplitude": 1.0},
    "g": {"name": "trimmed_cone", "cap": 1.0},
    "samples": {"lo": [-2.0], "hi": [2.0], "count": 50},
    "scheme": {"m": 16, "m_max": 32, "solver": "box"},
    "effective": {"method": "exact_1d", "p_max": 3.0, "p_nodes": 601, "q_nodes": 601}
  })"));
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hjlab_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(FitLogLog, SpecExamples) {
  std::vector<std::pair<double, double>> exact, root;
  for (double eps = 0.125; eps > 0.005; eps *= 0.5) {
    exact.emplace_back(eps, eps);
    root.emplace_back(eps, 3.0 * std::sqrt(eps));
  }
  const LogLogFit a = fit_loglog(exact);
  EXPECT_NEAR(a.slope, 1.0, 1e-12);
  EXPECT_NEAR(a.r2, 1.0, 1e-12);
  const LogLogFit b = fit_loglog(root);
  EXPECT_NEAR(b.slope, 0.5, 1e-12);
  EXPECT_NEAR(b.intercept, std::log(3.0), 1e-12);
  EXPECT_THROW(fit_loglog({{0.1, 0.1}, {0.05, 0.05}}), std::invalid_argument);
  EXPECT_THROW(fit_loglog({{0.1, 0.1}, {0.05, 0.0}, {0.025, 0.02}}), std::invalid_argument);
}

TEST(FitLogLog, OnePercentNoise) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<double, double>> pairs;
    for (double eps = 0.125; eps > 0.005; eps *= 0.5) pairs.emplace_back(eps, 0.4 * eps * (1.0 + noise(rng)));
    EXPECT_NEAR(fit_loglog(pairs).slope, 1.0, 0.05);
  }
}

TEST(Config, TomlAndJsonAgree) {
  const fs::path dir = temp_dir("config");
  std::ofstream(dir / "c.toml") << R"(name = "t"
dim = 2
eps_list = [0.125, 0.0625, 0.03125]
times = [0.5]
[spec]
kind = "homogeneous"
speed = "product_sine"
amplitude = 0.5
k = 1.0
[g]
name = "concave_pl"
directions = 6
scale = 1.0
[samples]
lo = [-0.5, -0.5]
hi = [0.5, 0.5]
count = 20
[scheme]
m = 16
m_max = 64
solver = "superposition"
[effective]
method = "consistent"
)";
  const ExperimentConfig from_toml = load_config(dir / "c.toml");
  std::ofstream(dir / "c.json") << config_to_json(from_toml).dump(2);
  const ExperimentConfig from_json = load_config(dir / "c.json");
  EXPECT_EQ(config_to_json(from_toml), config_to_json(from_json));
  EXPECT_EQ(from_toml.dim, 2);
  EXPECT_EQ(from_toml.solver, "superposition");
  EXPECT_EQ(from_toml.eps_list.size(), 3u);
}

TEST(Config, Validation) {
  ExperimentConfig c = small_1d("neg_sin2");
  EXPECT_NO_THROW(c.validate());
  c.eps_list = {0.1, 0.1, 0.05};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_1d("neg_sin2");
  c.dominance = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(load_config("/nonexistent/config.toml"), std::runtime_error);
}

TEST(Registry, InitialDataAndSamples) {
  const InitialData cone = make_initial_data(1, {{"name", "trimmed_cone"}, {"cap", 1.0}});
  EXPECT_EQ(cone.g({0.4, 0, 0}), 0.4);
  EXPECT_EQ(cone.g({-3.0, 0, 0}), 1.0);
  EXPECT_EQ(cone.lipschitz, 1.0);

  const InitialData hex = make_initial_data(2, {{"name", "concave_pl"}, {"directions", 6}, {"scale", 2.0}});
  EXPECT_TRUE(hex.concave_pl);
  EXPECT_EQ(hex.slopes.size(), 6u);
  EXPECT_NEAR(hex.lipschitz, 2.0, 1e-12);
  EXPECT_NEAR(hex.g({0, 0, 0}), 0.0, 1e-12);
  // Concave: midpoint value above the chord.
  const Vec3 a{0.3, -0.7, 0}, b{-0.2, 0.9, 0};
  EXPECT_GE(hex.g(0.5 * (a + b)), 0.5 * (hex.g(a) + hex.g(b)) - 1e-12);

  const InitialData bump =
      make_initial_data(1, {{"name", "gaussian_bump"}, {"amplitude", 1.0}, {"width", 0.5}});
  EXPECT_NEAR(bump.second_derivative_bound, 4.0, 1e-12);
  EXPECT_THROW(make_initial_data(1, {{"name", "nope"}}), std::invalid_argument);

  const auto cloud = sample_cloud(2, {-1, -1, 0}, {1, 1, 0}, 100);
  EXPECT_EQ(cloud, sample_cloud(2, {-1, -1, 0}, {1, 1, 0}, 100));
  for (const Vec3& x : cloud) {
    EXPECT_GE(x[0], -1.0);
    EXPECT_LE(x[1], 1.0);
  }
  const auto line = sample_cloud(1, {-2, 0, 0}, {2, 0, 0}, 4);
  EXPECT_DOUBLE_EQ(line[0][0], -1.5);
  EXPECT_DOUBLE_EQ(line[3][0], 1.5);
}

TEST(Rate, DeterministicRoundTripAndCsv) {
  const ExperimentConfig c = small_1d("neg_sin2");
  const RateReport a = run_rate_experiment(c);
  const RateReport b = run_rate_experiment(c);
  EXPECT_EQ(report_json(a), report_json(b));

  json j = a;
  RateReport back = j.get<RateReport>();
  EXPECT_EQ(report_json(back), report_json(a));

  const std::string csv = rate_csv(a);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(c.eps_list.size()) + 1);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "eps,sup_err,min_signed,scheme_err,qualified");

  const fs::path dir = temp_dir("emit");
  emit_report(a, "csv", dir);
  EXPECT_TRUE(fs::exists(dir / "small.json"));
  EXPECT_TRUE(fs::exists(dir / "small.csv"));
  EXPECT_THROW(emit_report(a, "xml", dir), std::invalid_argument);

  for (const RatePoint& p : a.points) {
    EXPECT_GE(p.sup_err, 0.0);
    EXPECT_GE(p.scheme_err, 0.0);
    EXPECT_NEAR(p.h, p.eps / p.m, 1e-15);
    EXPECT_GT(p.dt, 0.0);
  }
  // No slope is reported from disqualified points.
  if (a.fit_valid) {
    int qualified = 0;
    for (const RatePoint& p : a.points) qualified += p.qualified;
    EXPECT_EQ(a.fit.points, qualified);
  }
}

// Without y-dependence u^eps = u, so what remains is the scheme error.
TEST(Rate, YIndependentSpecHasOnlySchemeError) {
  ExperimentConfig c = small_1d("zero");
  c.effective_method = "y_independent";
  const RateReport r = run_rate_experiment(c);
  for (const RatePoint& p : r.points) {
    EXPECT_LE(p.sup_err, p.pointwise_diff / (std::sqrt(2.0) - 1.0) + 1e-12) << p.eps;
  }
  const LowerBoundReport lb = check_lower_bound(r, c);
  for (std::size_t k = 0; k < lb.minima.size(); ++k) {
    EXPECT_GE(lb.minima[k], -r.points[k].pointwise_diff / (std::sqrt(2.0) - 1.0) - 1e-12);
  }
}

TEST(Flat, RejectsSteepData) {
  ExperimentConfig c = small_1d("neg_sin2");
  c.g = {{"name", "sinusoid"}, {"amplitude", 2.0 / (2.0 * kPi)}, {"period", 1.0}};
  EXPECT_THROW(flat_part_experiment(c), std::invalid_argument);
}

TEST(CosineFloor, PotentialMeetsHypotheses) {
  const CosineFloorReport r = cosine_floor_experiment();
  EXPECT_LE(r.v_at_third, -1.0 + 1e-12);
  EXPECT_NEAR(r.v_max, 0.0, 1e-12);
  EXPECT_NEAR(r.v_argmax, 0.5, 1e-6);
  for (std::size_t k = 0; k < r.eps.size(); ++k) {
    EXPECT_GE(r.value[k], r.eps[k] / 6.0 - r.tolerance[k]);
  }
}
