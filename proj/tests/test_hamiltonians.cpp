#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hjlab/hamiltonians.hpp"
#include "oracles.hpp"

using namespace hjlab;

namespace {

double wrap_half(double u) { return u - std::round(u); }

// Independent transcriptions of the line geometry used by the catalog.
double line_potential_oracle(double beta, const Vec3& y) {
  auto s2 = [](double u) { return std::pow(std::sin(oracle::kPi * u), 2); };
  const double d1 = s2(y[1] - 0.5) + s2(y[2]);
  const double d2 = s2(y[0]) + s2(y[2] - 0.5);
  const double d3 = s2(y[0] - 0.5) + s2(y[1]);
  return -beta * d1 * d2 * d3;
}

double hedlund_distance_oracle(const Vec3& y) {
  const double l1 = std::hypot(wrap_half(y[1]), wrap_half(y[2]));
  const double l2 = std::hypot(wrap_half(y[0]), wrap_half(y[2] - 0.5));
  const double l3 = std::hypot(wrap_half(y[0] - 0.5), wrap_half(y[1] - 0.5));
  return std::min({l1, l2, l3});
}

std::vector<HamiltonianSpec> catalog() {
  std::vector<HamiltonianSpec> out;
  out.push_back(HamiltonianSpec::mechanical(PeriodicFunction(
      1, "-sin^2", [](const Vec3& y) { return -std::pow(std::sin(kPi * y[0]), 2); })));
  out.push_back(HamiltonianSpec::mechanical(PeriodicFunction(
      2, "cos", [](const Vec3& y) { return 0.3 * std::cos(2 * kPi * y[0]) * std::cos(2 * kPi * y[1]); })));
  out.push_back(HamiltonianSpec::homogeneous(
      PeriodicFunction(2, "a", [](const Vec3& y) {
        return 1.0 + 0.5 * std::sin(2 * kPi * y[0]) * std::sin(2 * kPi * y[1]);
      }),
      1.0));
  out.push_back(HamiltonianSpec::homogeneous(
      PeriodicFunction(1, "a", [](const Vec3& y) { return 1.5 + std::sin(2 * kPi * y[0]); }), 2.0));
  out.push_back(HamiltonianSpec::hedlund(hedlund_metric(0.1, 0.15), 0.1));
  out.push_back(clamp_quadratic(HamiltonianSpec::hedlund(hedlund_metric(0.1, 0.15), 0.1), 2.0, 51.0));
  out.push_back(HamiltonianSpec::mechanical(line_potential(1.0)));
  return out;
}

}  // namespace

TEST(EvalH, SpecExamples) {
  const auto zero1 = HamiltonianSpec::mechanical(PeriodicFunction::constant(1, 0.0));
  EXPECT_DOUBLE_EQ(eval_H(zero1, {0.3, 0, 0}, {1, 0, 0}), 0.5);

  const auto hom = HamiltonianSpec::homogeneous(PeriodicFunction::constant(2, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(eval_H(hom, {0.1, 0.2, 0}, {3, 4, 0}), 2.5);

  const double delta = 0.1;
  const auto hed = HamiltonianSpec::hedlund(hedlund_metric(delta, 0.15), delta);
  EXPECT_NEAR(eval_H(hed, {0.37, 0.0, 0.0}, {1, 0, 0}), 1.0 / delta, 1e-12);
}

TEST(EvalL, SpecExamples) {
  const LagrangianView mech(HamiltonianSpec::mechanical(PeriodicFunction::constant(1, 0.0)));
  EXPECT_DOUBLE_EQ(eval_L(mech, {0.5, 0, 0}, {2, 0, 0}), 2.0);

  const LagrangianView hed(HamiltonianSpec::hedlund(PeriodicFunction::constant(3, 1.0), 0.1));
  EXPECT_EQ(eval_L(hed, {0.2, 0.3, 0.4}, {0.3, 0.4, 0.0}), 0.0);
  EXPECT_EQ(eval_L(hed, {0.2, 0.3, 0.4}, {0.9, 1.2, 0.0}), kInfinity);
}

TEST(Clamp, RejectsSmallOffset) {
  const auto spec = HamiltonianSpec::mechanical(PeriodicFunction::constant(1, 0.0));
  EXPECT_THROW(clamp_quadratic(spec, 4.0, 0.5), std::invalid_argument);
}

TEST(Clamp, MechanicalUnchangedInsideBall) {
  const auto base = HamiltonianSpec::mechanical(PeriodicFunction(
      2, "V", [](const Vec3& y) { return -std::pow(std::sin(kPi * y[0]) * std::sin(kPi * y[1]), 2); }));
  const auto clamped = clamp_quadratic(base, 3.0, 2.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const Vec3 y{u(rng), u(rng), 0};
    Vec3 p{3 * u(rng), 3 * u(rng), 0};
    if (norm(p) > 3.0) p = (2.9 / norm(p)) * p;
    EXPECT_EQ(eval_H(clamped, y, p), eval_H(base, y, p));
  }
}

TEST(Clamp, HomogeneousSpliceIsConvexAndSandwiched) {
  const auto base = HamiltonianSpec::homogeneous(
      PeriodicFunction(2, "a", [](const Vec3& y) { return 1.25 + 0.75 * std::sin(2 * kPi * y[0]); },
                       std::make_pair(0.5, 2.0)),
      1.0);
  const double c0 = 4.0;
  const double k0 = 10.0;
  const auto spec = clamp_quadratic(base, c0, k0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Vec3 y{u(rng), u(rng), 0};
    const Vec3 a{12 * u(rng), 12 * u(rng), 0};
    const Vec3 b{12 * u(rng), 12 * u(rng), 0};
    // Convexity along the segment [a, b] by midpoint checks.
    for (int i = 1; i < 20; ++i) {
      const double s = i / 20.0;
      const Vec3 m = (1 - s) * a + s * b;
      EXPECT_LE(eval_H(spec, y, m), (1 - s) * eval_H(spec, y, a) + s * eval_H(spec, y, b) + 1e-10);
      const double r2 = 0.5 * dot(m, m);
      EXPECT_GE(eval_H(spec, y, m), r2 - k0 - 1e-10);
      EXPECT_LE(eval_H(spec, y, m), r2 + k0 + 1e-10);
    }
    // Continuity across |p| = c0.
    const Vec3 dir = (1.0 / norm(a)) * a;
    EXPECT_NEAR(eval_H(spec, y, (c0 - 1e-9) * dir), eval_H(spec, y, (c0 + 1e-9) * dir), 1e-7);
  }
  // Far out the quadratic branch takes over.
  EXPECT_NEAR(eval_H(spec, {0.1, 0.2, 0}, {100, 0, 0}), 0.5 * 1e4 - k0, 1e-9);
}

TEST(HedlundMetric, SpecExamplesAndBounds) {
  const double delta = 0.1;
  const auto a = hedlund_metric(0.05, 0.1);
  EXPECT_NEAR(a({0.0, 0.37, 0.5}), 0.05, 1e-15);
  EXPECT_GE(a({0.5, 0.0, 0.5}), 1.0);
  EXPECT_THROW(hedlund_metric(0.3, 0.1), std::invalid_argument);

  const double r = 0.15;
  const PeriodicField field = build_hedlund_metric(delta, r, 32);
  for (std::size_t i = 0; i < field.values().size(); ++i) {
    const Vec3 y = field.grid().node(i);
    EXPECT_GE(field[i], delta - 1e-15);
    EXPECT_LE(field[i], 1.0 + delta + 1e-15);
    const double dist = hedlund_distance_oracle(y);
    EXPECT_NEAR(hedlund_line_distance(y), dist, 1e-12);
    if (dist > r) EXPECT_GE(field[i], 1.0);
    if (dist == 0.0) EXPECT_NEAR(field[i], delta, 1e-15);
  }
}

TEST(LinePotential, SpecExamples) {
  const auto V = line_potential(1.0);
  EXPECT_NEAR(V({0.7, 0.5, 0.0}), 0.0, 1e-15);
  EXPECT_LT(V({0.25, 0.25, 0.25}), 0.0);
  EXPECT_THROW(line_potential(0.0), std::invalid_argument);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 1000; ++k) {
    const Vec3 y{u(rng), u(rng), u(rng)};
    EXPECT_NEAR(V(y), line_potential_oracle(1.0, y), 1e-12);
    EXPECT_LE(V(y), 0.0);
  }
}

TEST(LinePotential, GridMinimumMatchesContinuousMinimum) {
  const PeriodicField field = build_line_potential(1.0, 64);
  // Continuous minimum of the product form: dense start, then pattern search.
  Vec3 best{0, 0, 0};
  double vbest = 0.0;
  for (int i = 0; i < 32; ++i) {
    for (int j = 0; j < 32; ++j) {
      for (int k = 0; k < 32; ++k) {
        const Vec3 y{i / 32.0, j / 32.0, k / 32.0};
        const double v = line_potential_oracle(1.0, y);
        if (v < vbest) {
          vbest = v;
          best = y;
        }
      }
    }
  }
  for (double step = 1.0 / 64; step > 1e-10; step *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (int d = 0; d < 3; ++d) {
        for (double s : {-step, step}) {
          Vec3 y = best;
          y[static_cast<std::size_t>(d)] += s;
          const double v = line_potential_oracle(1.0, y);
          if (v < vbest) {
            vbest = v;
            best = y;
            moved = true;
          }
        }
      }
    }
  }
  EXPECT_NEAR(field.min(), vbest, 5e-3);
  EXPECT_GE(field.min(), vbest - 1e-12);
}

TEST(Legendre, SpecExamples1D) {
  const auto p_grid = UniformBox::symmetric(1, 801, 4.0);
  std::vector<double> quad(p_grid.size()), absval(p_grid.size());
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    const double p = p_grid.node(i)[0];
    quad[i] = 0.5 * p * p;
    absval[i] = std::abs(p);
  }
  const auto q_grid = UniformBox::symmetric(1, 5, 2.0);  // -2, -1, 0, 1, 2
  const auto lq = legendre_table(p_grid, quad, q_grid);
  EXPECT_NEAR(lq.values[3], 0.5, 1e-12);

  const auto q2 = UniformBox::symmetric(1, 7, 1.5);  // step 0.5
  const auto la = legendre_table(p_grid, absval, q2);
  EXPECT_NEAR(la.values[4], 0.0, 1e-12);  // q = 0.5
  EXPECT_TRUE(la.boundary[6]);            // q = 1.5
  EXPECT_EQ(la.values[6], kInfinity);
}

TEST(Legendre, MaxNormDualIsL1Ball) {
  const double delta = 0.1;
  const auto p_grid = UniformBox::symmetric(3, 21, 2.0);
  std::vector<double> h(p_grid.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Vec3 p = p_grid.node(i);
    h[i] = std::max({std::abs(p[0]), std::abs(p[1]), std::abs(p[2])}) / delta;
  }
  const auto q_grid = UniformBox::symmetric(3, 21, 10.0);
  const auto l = legendre_table(p_grid, h, q_grid);
  int checked = 0;
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    const Vec3 q = q_grid.node(i);
    const double l1 = delta * (std::abs(q[0]) + std::abs(q[1]) + std::abs(q[2]));
    if (l1 <= 1.0 - 1e-12) {
      EXPECT_NEAR(l.values[i], 0.0, 1e-12);
      ++checked;
    } else if (l1 > 1.0 + 1e-12) {
      EXPECT_TRUE(l.boundary[i]);
      EXPECT_EQ(l.values[i], kInfinity);
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Legendre, AgreesWithBruteForceConjugate) {
  auto H = [](double p) { return 0.25 * p * p * p * p + 0.3 * p; };
  const auto p_grid = UniformBox::symmetric(1, 2001, 3.0);
  std::vector<double> h(p_grid.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = H(p_grid.node(i)[0]);
  const auto q_grid = UniformBox::symmetric(1, 41, 5.0);
  const auto l = legendre_table(p_grid, h, q_grid);
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    const double q = q_grid.node(i)[0];
    EXPECT_NEAR(l.values[i], oracle::conjugate_1d(H, q, -3.0, 3.0), 1e-4) << "q = " << q;
  }
}

TEST(Legendre, Biconjugacy) {
  const auto p_grid = UniformBox::symmetric(2, 41, 2.0);
  std::vector<double> h(p_grid.size());
  double q_max = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Vec3 p = p_grid.node(i);
    h[i] = 0.5 * dot(p, p) + 0.2 * std::abs(p[0]) - 0.1 * p[1];
    q_max = std::max(q_max, norm(p) + 0.3);
  }
  const auto q_grid = UniformBox::symmetric(2, 81, 2.5);
  const auto back = conjugate_back(legendre_table(p_grid, h, q_grid), p_grid);
  const double tol = 2.0 * p_grid.h * q_max;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Vec3 p = p_grid.node(i);
    if (std::abs(p[0]) < 1.5 && std::abs(p[1]) < 1.5) EXPECT_NEAR(back[i], h[i], tol);
  }
}

TEST(Catalog, FenchelYoung) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& spec : catalog()) {
    const LagrangianView L(spec);
    const int dim = spec.dim();
    for (int k = 0; k < 300; ++k) {
      Vec3 y{0, 0, 0}, p{0, 0, 0}, q{0, 0, 0};
      for (int d = 0; d < dim; ++d) {
        const auto s = static_cast<std::size_t>(d);
        y[s] = u(rng);
        p[s] = 3 * u(rng);
        q[s] = 3 * u(rng);
      }
      const double l = eval_L(L, y, q);
      if (std::isfinite(l)) {
        EXPECT_GE(eval_H(spec, y, p) + l, dot(p, q) - 1e-9) << spec.describe();
      }
    }
  }
}

TEST(Catalog, ClosedFormLagrangianMatchesBruteForce) {
  const auto spec = HamiltonianSpec::homogeneous(
      PeriodicFunction(1, "a", [](const Vec3& y) { return 1.5 + std::sin(2 * kPi * y[0]); }), 2.0);
  const LagrangianView L(spec);
  for (double y : {0.0, 0.2, 0.7}) {
    const double a = 1.5 + std::sin(2 * oracle::kPi * y);
    for (double q : {-2.0, -0.3, 0.0, 1.1}) {
      const double ref = oracle::conjugate_1d([a](double p) { return p * p / a; }, q, -20.0, 20.0);
      EXPECT_NEAR(eval_L(L, {y, 0, 0}, {q, 0, 0}), ref, 1e-6);
    }
  }
}
