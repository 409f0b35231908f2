#include "hjlab/effective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hjlab/parallel.hpp"

namespace hjlab {

EffectiveProblem EffectiveProblem::from_table(const EffectiveTable& table, ScalarFn g,
                                              double lipschitz_g) {
  auto shared = std::make_shared<const EffectiveTable>(table);
  EffectiveProblem problem;
  problem.dim = table.p_grid.dim;
  problem.hbar = [shared](const Vec3& p) { return shared->hbar_at(p); };
  problem.lbar = [shared](const Vec3& q) { return shared->lbar_at(q); };
  problem.q_max = std::max(std::abs(table.q_grid.lo), std::abs(table.q_grid.hi()));
  problem.g = std::move(g);
  problem.lipschitz_g = lipschitz_g;
  problem.description = "table(" + table.method + ")";
  return problem;
}

EffectiveProblem EffectiveProblem::closed_form(int dim, ScalarFn hbar, ScalarFn lbar, double q_max,
                                               ScalarFn g, double lipschitz_g,
                                               std::string description) {
  EffectiveProblem problem;
  problem.dim = dim;
  problem.hbar = std::move(hbar);
  problem.lbar = std::move(lbar);
  problem.q_max = q_max;
  problem.g = std::move(g);
  problem.lipschitz_g = lipschitz_g;
  problem.description = std::move(description);
  return problem;
}

HopfLaxPoint hopf_lax_point(const EffectiveProblem& problem, const Vec3& x, double t,
                            const HopfLaxOptions& options) {
  if (t < 0.0) throw std::invalid_argument("Hopf-Lax needs t >= 0");
  if (t == 0.0) return {problem.g(x), x};
  const int dim = problem.dim;
  const int coarse =
      options.coarse > 0 ? options.coarse : (dim == 1 ? 4001 : dim == 2 ? 201 : 41);
  const double qm = problem.q_max;
  if (!(qm > 0.0)) throw std::invalid_argument("Hopf-Lax needs q_max > 0");

  double best = kInfinity;
  Vec3 best_q{0, 0, 0};
  auto consider = [&](const Vec3& q) {
    for (int d = 0; d < dim; ++d) {
      if (std::abs(q[static_cast<std::size_t>(d)]) > qm * (1.0 + 1e-12)) return;
    }
    const double l = problem.lbar(q);
    if (!std::isfinite(l)) return;
    const double v = problem.g(x - t * q) + t * l;
    if (v < best) {
      best = v;
      best_q = q;
    }
  };

  const UniformBox box = UniformBox::symmetric(dim, coarse, qm);
  for (std::size_t i = 0; i < box.size(); ++i) consider(box.node(i));
  if (!std::isfinite(best)) {
    throw std::runtime_error("effective Lagrangian is infinite on the whole search set");
  }

  double h = box.h;
  for (int round = 0; round < options.rounds; ++round) {
    const Vec3 center = best_q;
    h /= options.refine_factor;
    const int half = options.refine_factor;
    const int span = 2 * half + 1;
    const int count = dim == 1 ? span : dim == 2 ? span * span : span * span * span;
    for (int c = 0; c < count; ++c) {
      int rest = c;
      Vec3 q = center;
      for (int d = 0; d < dim; ++d) {
        q[static_cast<std::size_t>(d)] += (rest % span - half) * h;
        rest /= span;
      }
      consider(q);
    }
  }
  return {best, x - t * best_q};
}

double hopf_lax(const EffectiveProblem& problem, const Vec3& x, double t,
                const HopfLaxOptions& options) {
  return hopf_lax_point(problem, x, t, options).value;
}

SpaceTimeSolution solve_effective(const EffectiveProblem& problem, const std::vector<Vec3>& samples,
                                  const std::vector<double>& times, const HopfLaxOptions& options,
                                  int threads) {
  SpaceTimeSolution sol;
  sol.mesh.dim = problem.dim;
  sol.sample_points = samples;
  sol.times = times;
  sol.spec_description = problem.description;
  sol.layers.assign(times.size(), std::vector<double>(samples.size()));
  sol.minimizers.assign(times.size(), std::vector<Vec3>(samples.size()));
  const std::size_t n = times.size() * samples.size();
  parallel_for(
      n,
      [&](std::size_t idx) {
        const std::size_t k = idx / samples.size();
        const std::size_t s = idx % samples.size();
        const auto r = hopf_lax_point(problem, samples[s], times[k], options);
        sol.layers[k][s] = r.value;
        sol.minimizers[k][s] = r.minimizer;
      },
      threads);
  return sol;
}

SpaceTimeSolution solve_effective_fd(const EffectiveProblem& problem,
                                     const std::vector<double>& times, SchemeConfig config) {
  auto hbar = problem.hbar;
  const HamiltonianSpec spec = HamiltonianSpec::custom(
      problem.dim, [hbar](const Vec3&, const Vec3& p) { return hbar(p); }, problem.description,
      true);
  config.flux = FluxKind::lax_friedrichs;
  return solve_oscillatory(spec, problem.g, problem.lipschitz_g, 16.0 * config.h, times, config);
}

double concave_closed_form(const std::vector<Vec3>& slopes, const std::vector<double>& offsets,
                           const ScalarFn& hbar, const Vec3& x, double t) {
  if (slopes.empty() || slopes.size() != offsets.size()) {
    throw std::invalid_argument("concave data needs matching slopes and offsets");
  }
  double best = kInfinity;
  for (std::size_t j = 0; j < slopes.size(); ++j) {
    best = std::min(best, dot(slopes[j], x) + offsets[j] - t * hbar(slopes[j]));
  }
  return best;
}

AngularHbar::AngularHbar(std::vector<double> support) : support_(std::move(support)) {
  const std::size_t n = support_.size();
  if (n < 3) throw std::invalid_argument("angular Hbar needs at least three directions");
  for (double h : support_) {
    if (!(h > 0.0)) throw std::invalid_argument("angular Hbar values must be positive");
  }
  // Vertex j joins the support lines j and j + 1.
  for (std::size_t j = 0; j < n; ++j) {
    const double a = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(n);
    const double b = 2.0 * kPi * static_cast<double>(j + 1) / static_cast<double>(n);
    const double det = std::sin(b - a);
    const double h0 = support_[j];
    const double h1 = support_[(j + 1) % n];
    vertices_.push_back(Vec3{(h0 * std::sin(b) - h1 * std::sin(a)) / det,
                             (std::cos(a) * h1 - std::cos(b) * h0) / det, 0.0});
  }
  for (const Vec3& v : vertices_) {
    for (std::size_t j = 0; j < n; ++j) {
      const double th = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(n);
      if (v[0] * std::cos(th) + v[1] * std::sin(th) > support_[j] * (1.0 + 1e-9)) {
        throw std::invalid_argument("angular Hbar values are not those of a convex function");
      }
    }
  }
}

double AngularHbar::hbar(const Vec3& p) const {
  double best = -kInfinity;
  for (const Vec3& v : vertices_) best = std::max(best, p[0] * v[0] + p[1] * v[1]);
  return best;
}

double AngularHbar::lbar(const Vec3& q) const {
  const std::size_t n = support_.size();
  for (std::size_t j = 0; j < n; ++j) {
    const double th = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(n);
    if (q[0] * std::cos(th) + q[1] * std::sin(th) > support_[j] * (1.0 + 1e-12)) return kInfinity;
  }
  return 0.0;
}

double AngularHbar::max_speed() const {
  double best = 0.0;
  for (const Vec3& v : vertices_) best = std::max(best, std::hypot(v[0], v[1]));
  return best;
}

}  // namespace hjlab
