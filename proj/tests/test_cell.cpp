#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hjlab/cell.hpp"
#include "oracles.hpp"

using namespace hjlab;

namespace {

HamiltonianSpec zero_potential(int dim) {
  return HamiltonianSpec::mechanical(PeriodicFunction::constant(dim, 0.0));
}

PeriodicFunction minus_sin2() {
  return PeriodicFunction(1, "-sin^2", [](const Vec3& y) { return -std::pow(std::sin(kPi * y[0]), 2); });
}

// V = -P + max P for a random nonnegative trig polynomial P, scaled to amplitude <= 1.
PeriodicFunction random_potential(std::mt19937_64& rng) {
  const auto poly = oracle::random_trig_poly(rng, 1 + static_cast<int>(rng() % 3));
  double top = -kInfinity;
  for (int i = 0; i < 4096; ++i) top = std::max(top, poly(i / 4096.0));
  const double scale = 1.0 / (2.0 * poly.mean());
  return PeriodicFunction(1, "random", [poly, top, scale](const Vec3& y) { return scale * (poly(y[0]) - top); });
}

// Independent exact 1D Hbar: Simpson quadrature plus bisection.
double exact_hbar_oracle(const PeriodicFunction& V, double p) {
  double vmax = -kInfinity;
  for (int i = 0; i < 20000; ++i) vmax = std::max(vmax, V({i / 20000.0, 0, 0}));
  auto F = [&](double lam) {
    return oracle::simpson([&](double y) { return std::sqrt(std::max(2.0 * (lam - V({y, 0, 0})), 0.0)); },
                           0.0, 1.0, 20000);
  };
  if (std::abs(p) <= F(vmax)) return vmax;
  double lo = vmax, hi = vmax + 0.5 * (std::abs(p) + 1) * (std::abs(p) + 1);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (F(mid) < std::abs(p) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(LargeTime, ZeroPotential) {
  const auto e = effective_H_large_time(zero_potential(1), {1, 0, 0}, 10.0, 64);
  EXPECT_NEAR(e.hbar, 0.5, e.error_bound + 1e-12);
  EXPECT_GE(e.error_bound, 0.0);
  EXPECT_THROW(effective_H_large_time(zero_potential(1), {1, 0, 0}, 5.0, 64), std::invalid_argument);
}

TEST(LargeTime, HedlundAlongALine) {
  const double delta = 0.1;
  const auto spec = clamp_quadratic(HamiltonianSpec::hedlund(hedlund_metric(delta, 0.15), delta), 2.0,
                                    0.5 / (delta * delta) + 1.0);
  const auto e = effective_H_large_time(spec, {1, 0, 0}, 10.0, 32);
  EXPECT_NEAR(e.hbar, 1.0 / delta, 0.2 / delta);
}

TEST(Discounted, ZeroPotentialAndLambdaRefinement) {
  const auto e = effective_H_discounted(zero_potential(1), {1, 0, 0}, 0.01, 64);
  EXPECT_NEAR(e.hbar, 0.5, e.error_bound + 1e-12);

  const auto V = HamiltonianSpec::mechanical(PeriodicFunction(
      1, "cos", [](const Vec3& y) { return -0.5 * (1.0 + std::cos(2 * kPi * y[0])); }));
  double prev = kInfinity;
  for (double lambda : {0.1, 0.03, 0.01}) {
    const auto d = effective_H_discounted(V, {1.5, 0, 0}, lambda, 128);
    EXPECT_LT(d.error_bound, prev);
    prev = d.error_bound;
  }
}

TEST(Exact1D, SpecExamples) {
  EXPECT_NEAR(effective_H_1d_mechanical(PeriodicFunction::constant(1, 0.0), 1.0), 0.5, 1e-12);
  EXPECT_EQ(effective_H_1d_mechanical(minus_sin2(), 0.0), 0.0);
  const double i0 = flat_part_radius_1d(minus_sin2());
  EXPECT_NEAR(i0, 2.0 * std::sqrt(2.0) / kPi, 1e-8);
  EXPECT_NEAR(i0, oracle::simpson([](double y) { return std::sqrt(2.0) * std::abs(std::sin(oracle::kPi * y)); },
                                  0.0, 1.0),
              1e-8);
  EXPECT_EQ(effective_H_1d_mechanical(minus_sin2(), 0.5), 0.0);
  EXPECT_THROW(effective_H_1d_mechanical(PeriodicFunction::constant(2, 0.0), 1.0), std::invalid_argument);
}

TEST(Exact1D, MatchesIndependentQuadrature) {
  std::mt19937_64 rng(8);
  for (int c = 0; c < 10; ++c) {
    const auto V = random_potential(rng);
    const double p = 3.0 * static_cast<double>(c) / 9.0;
    EXPECT_NEAR(effective_H_1d_mechanical(V, p), exact_hbar_oracle(V, p), 1e-7) << "case " << c;
  }
}

TEST(EffectiveGradient, SpecExamples) {
  EXPECT_NEAR(effective_gradient_1d(PeriodicFunction::constant(1, 0.0), 1.0), 1.0, 1e-12);
  EXPECT_THROW(effective_gradient_1d(minus_sin2(), 0.5), std::domain_error);
  EXPECT_LT(effective_gradient_1d(minus_sin2(), -1.5), 0.0);
}

// effective_gradient_1d against central differences of the exact Hbar on 10 cases.
TEST(EffectiveGradient, FiniteDifferenceOracle) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int c = 0; c < 10; ++c) {
    const auto V = c == 0 ? minus_sin2() : random_potential(rng);
    const double i0 = flat_part_radius_1d(V);
    double p = c == 0 ? 1.2 : i0 + 0.1 + 2.0 * u(rng);
    if (c % 3 == 2) p = -p;
    const double d = 1e-4;
    const double fd = (effective_H_1d_mechanical(V, p + d) - effective_H_1d_mechanical(V, p - d)) / (2 * d);
    EXPECT_LE(std::abs(effective_gradient_1d(V, p) - fd), 1e-5) << "case " << c << " p " << p;
    ++checked;
  }
  EXPECT_EQ(checked, 10);
}

// Exact quadrature vs the large-time solver, within the solver's reported bound,
// on 20 random potentials and slopes.
TEST(CrossMethod, ExactVsLargeTime) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  int failures = 0;
  for (int c = 0; c < 20; ++c) {
    const auto V = random_potential(rng);
    const double p = u(rng);
    const auto e = effective_H_large_time(HamiltonianSpec::mechanical(V), {p, 0, 0}, 40.0, 256);
    const double exact = effective_H_1d_mechanical(V, p);
    if (std::abs(e.hbar - exact) > e.error_bound) {
      ++failures;
      ADD_FAILURE() << "case " << c << " p " << p << ": " << e.hbar << " vs " << exact << " bound "
                    << e.error_bound;
    }
  }
  EXPECT_EQ(failures, 0);
}

TEST(CrossMethod, DiscountedVsLargeTime) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int c = 0; c < 20; ++c) {
    const auto spec = HamiltonianSpec::mechanical(random_potential(rng));
    const Vec3 p{u(rng), 0, 0};
    const auto lt = effective_H_large_time(spec, p, 20.0, 64);
    const auto dc = effective_H_discounted(spec, p, 0.01, 64);
    EXPECT_LE(std::abs(lt.hbar - dc.hbar), lt.error_bound + dc.error_bound) << "case " << c;
  }
}

TEST(Table, ZeroPotentialConvexAndBiconjugate) {
  const auto spec = zero_potential(1);
  const auto p_grid = UniformBox::symmetric(1, 17, 2.0);
  const auto q_grid = default_q_grid(spec, 2.0, 33);
  const auto table = build_effective_table(spec, p_grid, CellMethod::exact_1d, q_grid);
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    const double p = p_grid.node(i)[0];
    EXPECT_NEAR(table.hbar[i], 0.5 * p * p, table.hbar_error[i] + 1e-12);
  }
  EXPECT_EQ(table.convexity_violations, 0);
  const auto back = conjugate_back(ConjugateTable{q_grid, table.lbar, table.lbar_boundary}, p_grid);
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    if (std::abs(p_grid.node(i)[0]) <= 1.5) EXPECT_NEAR(back[i], table.hbar[i], 2.0 * q_grid.h * 2.0);
  }

  const auto lt = build_effective_table(HamiltonianSpec::mechanical(minus_sin2()), p_grid,
                                        CellMethod::large_time, q_grid, {.T = 20.0, .res = 64});
  EXPECT_EQ(lt.convexity_violations, 0);
  EXPECT_THROW(build_effective_table(zero_potential(2), UniformBox::symmetric(2, 3, 1.0), CellMethod::exact_1d,
                                     UniformBox::symmetric(2, 3, 1.0)),
               std::invalid_argument);
}

// Quadratic growth of the clamped effective Hamiltonian.
TEST(Clamped, HbarWithinQuadraticEnvelope) {
  const double k0 = 3.0;
  const auto spec = clamp_quadratic(
      HamiltonianSpec::homogeneous(
          PeriodicFunction(2, "a", [](const Vec3& y) { return 1.0 + 0.5 * std::sin(2 * kPi * y[0]); }), 1.0),
      2.0, k0);
  for (double r : {0.5, 1.5, 3.0}) {
    const Vec3 p{r, 0.3 * r, 0};
    const auto e = effective_H_large_time(spec, p, 10.0, 32);
    EXPECT_GE(e.hbar + e.error_bound, 0.5 * dot(p, p) - k0);
    EXPECT_LE(e.hbar - e.error_bound, 0.5 * dot(p, p) + k0);
  }
}
