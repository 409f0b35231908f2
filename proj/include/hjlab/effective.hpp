#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hjlab/hamiltonians.hpp"
#include "hjlab/hj_solver.hpp"
#include "hjlab/vec.hpp"

namespace hjlab {

using ScalarFn = std::function<double(const Vec3&)>;

/// Effective problem u_t + Hbar(Du) = 0, u(.,0) = g.
struct EffectiveProblem {
  int dim = 1;
  ScalarFn hbar;
  ScalarFn lbar;        ///< +inf outside its finite domain
  double q_max = 0.0;   ///< velocities searched: the box [-q_max, q_max]^dim
  ScalarFn g;
  double lipschitz_g = 0.0;
  std::string description;

  static EffectiveProblem from_table(const EffectiveTable& table, ScalarFn g, double lipschitz_g);
  static EffectiveProblem closed_form(int dim, ScalarFn hbar, ScalarFn lbar, double q_max,
                                      ScalarFn g, double lipschitz_g, std::string description);
};

struct HopfLaxOptions {
  int coarse = 0;       ///< nodes per axis of the first search grid (0 = by dimension)
  int rounds = 2;       ///< local refinements
  int refine_factor = 3;
};

struct HopfLaxPoint {
  double value = 0.0;
  Vec3 minimizer{0, 0, 0};  ///< y0, the foot of the optimal line
};

/// u(x,t) = min over |x - y| <= t q_max of g(y) + t Lbar((x - y)/t), searched
/// over velocities q = (x - y)/t on a grid, then refined twice around the
/// best node. Points with infinite Lbar are skipped. t = 0 returns g(x).
HopfLaxPoint hopf_lax_point(const EffectiveProblem& problem, const Vec3& x, double t,
                            const HopfLaxOptions& options = {});
double hopf_lax(const EffectiveProblem& problem, const Vec3& x, double t,
                const HopfLaxOptions& options = {});

/// Hopf-Lax at every (sample, time); records minimizers.
SpaceTimeSolution solve_effective(const EffectiveProblem& problem, const std::vector<Vec3>& samples,
                                  const std::vector<double>& times,
                                  const HopfLaxOptions& options = {}, int threads = 0);

/// Monotone finite-difference solve of the effective equation (Lax-Friedrichs
/// with y-independent Hbar), used as a cross-check of the Hopf-Lax values.
SpaceTimeSolution solve_effective_fd(const EffectiveProblem& problem,
                                     const std::vector<double>& times, SchemeConfig config);

/// Concave piecewise-linear data g(x) = min_j (p_j . x + b_j): the effective
/// solution is min_j (p_j . x + b_j - t Hbar(p_j)).
double concave_closed_form(const std::vector<Vec3>& slopes, const std::vector<double>& offsets,
                           const ScalarFn& hbar, const Vec3& x, double t);

/// Degree-1 homogeneous effective Hamiltonian in 2D given by its values h_j
/// on n equispaced unit directions theta_j = 2 pi j / n. Lbar is the
/// indicator of K = {q : q . e_j <= h_j for all j} and Hbar is the support
/// function of K, so the pair is an exact Legendre couple.
class AngularHbar {
 public:
  /// Throws std::invalid_argument when n < 3, some h_j <= 0, or a
  /// constraint is redundant (the values are not those of a convex Hbar).
  explicit AngularHbar(std::vector<double> support);

  const std::vector<double>& support() const { return support_; }
  const std::vector<Vec3>& vertices() const { return vertices_; }
  double hbar(const Vec3& p) const;
  double lbar(const Vec3& q) const;
  double max_speed() const;

 private:
  std::vector<double> support_;
  std::vector<Vec3> vertices_;
};

}  // namespace hjlab
