#pragma once

#include <string>
#include <vector>

#include "hjlab/fields.hpp"
#include "hjlab/hamiltonians.hpp"

namespace hjlab {

/// d(., L_i) on the grid of a T^3 field.
struct DistanceField {
  Grid grid{3, 4};
  std::vector<double> values;
  std::vector<char> source;  ///< 1 on nodes within h/2 of L_i + Z^3
  int line = 1;
  int sweeps = 0;
  double residual = 0.0;  ///< max upwind Eikonal residual off the sources

  PeriodicField field() const { return PeriodicField(grid, values); }
};

/// Nodes of Grid(3, res) within h/2 (torus distance) of line L_i.
std::vector<char> line_source_nodes(const Grid& grid, int line);

/// Fast sweeping (8 Gauss-Seidel orderings, periodic) for
/// |Dd| = sqrt(-2V) with d = 0 on the source nodes of line L_i. Stops when
/// no node moves by more than 1e-10 in a full round of orderings. Throws
/// std::domain_error on a positive sample of V.
DistanceField jacobi_distance(const PeriodicField& V, int line);

/// Shortest paths on the periodic grid graph whose edges are the primitive
/// offsets with max |component| <= stencil (26 neighbours for 1, 98 for 2), weighted by
/// Simpson's rule for the integral of f = sqrt(-2V) along the edge (midpoint
/// by interpolation). An independent check of jacobi_distance.
std::vector<double> graph_distance(const PeriodicField& V, int line, int stencil = 1);

/// Sweeps 1/2 |shift + Dv|^2 + V = level (upwind, periodic) with v = 0 on the
/// source nodes of L_i. shift = 0, level = 0 is the Jacobi distance. Throws
/// std::domain_error where V > level.
DistanceField sweep_line_problem(const PeriodicField& V, int line, const Vec3& shift,
                                 double level);

struct GapReport {
  int res = 0;
  int line_i = 1;
  int line_j = 2;
  double beta = 0.0;
  std::vector<double> eps;
  std::vector<double> hbar;          ///< Hbar(eps e_i) = eps^2 / 2 used as the level
  std::vector<double> deviation;     ///< sup |v(., eps e_i) - d(., L_i)|, v = 0 on L_i
  double corrector_residual = 0.0;
  double gap = 0.0;                  ///< min over L_j source nodes of d(., L_i)
  int sweeps = 0;
  double eikonal_residual = 0.0;
  // Large-time corrector at the first eps, shifted to min 0 on L_i, against
  // the swept one (zero horizon = skipped).
  double cross_check_eps = 0.0;
  double cross_check_horizon = 0.0;
  double cross_check_hbar = 0.0;
  double cross_check_hbar_error = 0.0;
  double cross_check_deviation = 0.0;

  std::string to_json() const;
};

/// Correctors v(., eps e_i) of H = |p|^2/2 + V, V the line potential, are
/// unique up to constants and constant on L_i; each is computed as the
/// stationary solution with v = 0 on L_i and compared with d(., L_i).
GapReport corrector_limit_gap(double beta, const std::vector<double>& eps_list, int line_i,
                              int line_j, int res, double cross_check_horizon = 0.0);

}  // namespace hjlab
