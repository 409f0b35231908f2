#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hjlab/effective.hpp"
#include "oracles.hpp"

using namespace hjlab;

namespace {

EffectiveProblem quadratic_1d(ScalarFn g, double lip, double q_max = 4.0) {
  return EffectiveProblem::closed_form(
      1, [](const Vec3& p) { return 0.5 * p[0] * p[0]; }, [](const Vec3& q) { return 0.5 * q[0] * q[0]; },
      q_max, std::move(g), lip, "p^2/2");
}

EffectiveProblem abs_1d(ScalarFn g, double lip) {
  return EffectiveProblem::closed_form(
      1, [](const Vec3& p) { return std::abs(p[0]); },
      [](const Vec3& q) { return std::abs(q[0]) <= 1.0 ? 0.0 : kInfinity; }, 1.0, std::move(g), lip, "|p|");
}

double bumpy(double x) { return std::sin(3.0 * x) + 0.2 * std::abs(x - 0.4); }

}  // namespace

TEST(HopfLax, QuadraticOnConcaveCone) {
  const auto problem = quadratic_1d([](const Vec3& x) { return -std::abs(x[0]); }, 1.0);
  for (double x : {-1.3, -0.2, 0.0, 0.45, 2.0}) {
    for (double t : {0.1, 0.5, 1.0}) {
      const double closed = -std::abs(x) - 0.5 * t;
      const double dense = oracle::hopf_lax_1d([](double y) { return -std::abs(y); },
                                               [](double q) { return 0.5 * q * q; }, x, t, x - 4 * t, x + 4 * t);
      EXPECT_NEAR(dense, closed, 1e-6);
      EXPECT_NEAR(hopf_lax(problem, {x, 0, 0}, t), closed, 1e-6);
    }
  }
}

TEST(HopfLax, ConstantDataAndTimeZero) {
  const auto problem = quadratic_1d([](const Vec3&) { return 2.5; }, 0.0);
  EXPECT_NEAR(hopf_lax(problem, {0.7, 0, 0}, 3.0), 2.5, 1e-12);
  const auto bump = quadratic_1d([](const Vec3& x) { return bumpy(x[0]); }, 3.2);
  EXPECT_EQ(hopf_lax(bump, {0.3, 0, 0}, 0.0), bumpy(0.3));
}

TEST(HopfLax, IndicatorLagrangian) {
  const auto problem = abs_1d([](const Vec3& x) { return std::abs(x[0]); }, 1.0);
  for (double x : {-2.0, -0.5, 0.0, 0.3, 1.7}) {
    for (double t : {0.25, 1.0}) {
      const double dense = oracle::hopf_lax_1d([](double y) { return std::abs(y); },
                                               [](double q) { return std::abs(q) <= 1.0 ? 0.0 : INFINITY; }, x,
                                               t, x - t, x + t);
      EXPECT_NEAR(dense, std::max(std::abs(x) - t, 0.0), 1e-5);
      EXPECT_NEAR(hopf_lax(problem, {x, 0, 0}, t), std::max(std::abs(x) - t, 0.0), 1e-9);
    }
  }
}

TEST(HopfLax, MatchesDenseOracleOnNonconvexData) {
  const auto problem = quadratic_1d([](const Vec3& x) { return bumpy(x[0]); }, 3.2);
  for (double x : {-1.0, -0.3, 0.4, 1.1}) {
    for (double t : {0.2, 0.7}) {
      const double dense = oracle::hopf_lax_1d(bumpy, [](double q) { return 0.5 * q * q; }, x, t, x - 4 * t,
                                               x + 4 * t);
      EXPECT_NEAR(hopf_lax(problem, {x, 0, 0}, t), dense, 1e-5);
    }
  }
}

TEST(HopfLax, RejectsEmptySearchSet) {
  const auto problem = EffectiveProblem::closed_form(
      1, [](const Vec3&) { return 0.0; }, [](const Vec3&) { return kInfinity; }, 1.0,
      [](const Vec3&) { return 0.0; }, 0.0, "empty");
  EXPECT_THROW(hopf_lax(problem, {0, 0, 0}, 1.0), std::runtime_error);
}

TEST(HopfLax, Semigroup) {
  const auto problem = quadratic_1d([](const Vec3& x) { return bumpy(x[0]); }, 3.2);
  const double s = 0.3, t = 0.8;
  const auto later = quadratic_1d([&](const Vec3& x) { return hopf_lax(problem, x, s); }, 3.2);
  for (double x : {-0.8, 0.0, 0.55, 1.2}) {
    EXPECT_NEAR(hopf_lax(later, {x, 0, 0}, t - s), hopf_lax(problem, {x, 0, 0}, t), 1e-5);
  }
}

TEST(HopfLax, DomainOfDependence) {
  const auto near = quadratic_1d([](const Vec3& x) { return bumpy(x[0]); }, 3.2, 2.0);
  const auto far = quadratic_1d(
      [](const Vec3& x) { return std::abs(x[0] - 0.5) > 1.0 ? bumpy(x[0]) - 5.0 : bumpy(x[0]); }, 3.2, 2.0);
  EXPECT_EQ(hopf_lax(near, {0.5, 0, 0}, 0.5), hopf_lax(far, {0.5, 0, 0}, 0.5));
}

TEST(HopfLax, ConcaveClosedForm2D) {
  const std::vector<Vec3> slopes = {{1, 0, 0}, {-0.5, 0.8, 0}, {-0.5, -0.8, 0}};
  const std::vector<double> offsets = {0.0, 0.1, -0.2};
  const auto g = [&](const Vec3& x) {
    double v = kInfinity;
    for (std::size_t j = 0; j < slopes.size(); ++j) v = std::min(v, dot(slopes[j], x) + offsets[j]);
    return v;
  };
  const auto hbar = [](const Vec3& p) { return 0.5 * dot(p, p) + 0.25 * std::abs(p[0]); };
  // Conjugate of the anisotropic Hbar: soft-threshold in the first coordinate.
  const auto lbar = [](const Vec3& q) {
    const double a = std::max(std::abs(q[0]) - 0.25, 0.0);
    return 0.5 * (a * a + q[1] * q[1]);
  };
  const auto problem = EffectiveProblem::closed_form(2, hbar, lbar, 2.0, g, 1.0, "aniso");
  for (const Vec3 x : {Vec3{0, 0, 0}, Vec3{0.3, -0.2, 0}, Vec3{-0.4, 0.5, 0}}) {
    for (double t : {0.25, 0.5}) {
      EXPECT_NEAR(hopf_lax(problem, x, t), concave_closed_form(slopes, offsets, hbar, x, t), 2e-4);
    }
  }
}

TEST(SolveEffective, LipschitzPreservedAndMinimizersRecorded) {
  const auto problem = quadratic_1d([](const Vec3& x) { return bumpy(x[0]); }, 3.2);
  std::vector<Vec3> samples;
  for (int i = 0; i <= 80; ++i) samples.push_back({-1.0 + i / 40.0, 0, 0});
  const auto sol = solve_effective(problem, samples, {0.2, 0.5});
  ASSERT_EQ(sol.minimizers.size(), 2u);
  for (const auto& layer : sol.layers) {
    for (std::size_t i = 1; i < layer.size(); ++i) {
      EXPECT_LE(std::abs(layer[i] - layer[i - 1]) * 40.0, 3.2 + 1e-3);
    }
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_LE(std::abs(samples[i][0] - sol.minimizers[1][i][0]), 0.5 * 4.0 + 1e-12);
  }
}

TEST(SolveEffective, FiniteDifferenceCrossCheck) {
  const auto problem = quadratic_1d([](const Vec3& x) { return std::min(std::abs(x[0]), 1.0); }, 1.0, 2.0);
  std::vector<Vec3> samples;
  for (int i = 0; i <= 40; ++i) samples.push_back({-1.0 + i / 20.0, 0, 0});
  const auto hl = solve_effective(problem, samples, {0.5});
  double fd_err[2] = {0.0, 0.0};
  std::vector<double> fd_vals[2];
  for (int level = 0; level < 2; ++level) {
    SchemeConfig cfg;
    cfg.h = level == 0 ? 1.0 / 256 : 1.0 / 512;
    cfg.domain = DomainKind::box;
    cfg.radius = 3.0;
    const auto fd = solve_effective_fd(problem, {0.5}, cfg);
    for (const Vec3& x : samples) fd_vals[level].push_back(fd.value(0, x));
  }
  double estimate = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    estimate = std::max(estimate, std::abs(fd_vals[0][i] - fd_vals[1][i]) / (std::sqrt(2.0) - 1.0));
    fd_err[1] = std::max(fd_err[1], std::abs(hl.layers[0][i] - fd_vals[1][i]));
  }
  EXPECT_LE(fd_err[1], estimate);
  EXPECT_GT(estimate, 0.0);
}

TEST(AngularHbar, HexagonSupportFunction) {
  const AngularHbar hex(std::vector<double>(6, 1.0));
  EXPECT_NEAR(hex.hbar({1, 0, 0}), 1.0, 1e-12);
  EXPECT_NEAR(hex.hbar({3, 0, 0}), 3.0, 1e-12);  // degree-1 homogeneous
  EXPECT_EQ(hex.lbar({0, 0, 0}), 0.0);
  EXPECT_EQ(hex.lbar({2, 0, 0}), kInfinity);
  EXPECT_EQ(hex.vertices().size(), 6u);
  // Vertices of the hexagon {q . e_j <= 1} sit at distance 2/sqrt(3).
  for (const Vec3& v : hex.vertices()) EXPECT_NEAR(norm(v), 2.0 / std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(hex.max_speed(), 2.0 / std::sqrt(3.0), 1e-12);

  // Support function against a brute-force max over the polygon vertices.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 200; ++k) {
    const Vec3 p{u(rng), u(rng), 0};
    double best = -kInfinity;
    for (const Vec3& v : hex.vertices()) best = std::max(best, dot(p, v));
    EXPECT_NEAR(hex.hbar(p), best, 1e-12);
  }
}

TEST(AngularHbar, RejectsInvalidSupport) {
  EXPECT_THROW(AngularHbar({1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(AngularHbar({1.0, -1.0, 1.0, 1.0}), std::invalid_argument);
  // The constraint along e_1 is implied by its neighbours when h_1 is large.
  EXPECT_THROW(AngularHbar({1.0, 5.0, 1.0, 1.0, 1.0, 1.0}), std::invalid_argument);
}
