#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hjlab/fields.hpp"
#include "hjlab/hamiltonians.hpp"
#include "hjlab/vec.hpp"

namespace hjlab {

enum class CellMethod { large_time, discounted, exact_1d };

std::string to_string(CellMethod method);
CellMethod cell_method_from_string(const std::string& name);

/// One estimate of Hbar(p) with a two-sided error bound.
struct CellEstimate {
  Vec3 p{0, 0, 0};
  double hbar = 0.0;
  double error_bound = 0.0;
  CellMethod method = CellMethod::large_time;
  int res = 0;
  double horizon = 0.0;  ///< T for large_time, pseudo-time for discounted
  double lambda = 0.0;
  long steps = 0;
  double residual = 0.0;  ///< discounted: sup of the mean-removed pseudo-time rate
  double max_gradient = 0.0;
  /// Torus profile on the res^dim grid: w(.,T) + T*hbar (large_time) or
  /// v^lambda (discounted).
  std::vector<double> profile;
};

/// Solves w_t + H(y, p + Dw) = 0 on the torus from w = 0 up to T >= 10.
/// hbar = -(max w + min w)/(2T); error_bound = osc(w)/(2T) + |s - hbar| with
/// s = -(mean w(T) - mean w(T/2))/(T/2).
CellEstimate effective_H_large_time(const HamiltonianSpec& spec, const Vec3& p, double T, int res,
                                    double cfl = 0.45);

/// Torus evolution of w_t + H(y, p + Dw) = 0 from w = 0; returns w at each
/// of the increasing horizons (> 0). u(x, t) = p.x + eps w(x/eps, t/eps)
/// solves the oscillatory problem with linear data p.x.
std::vector<std::vector<double>> evolve_cell(const HamiltonianSpec& spec, const Vec3& p,
                                             const std::vector<double>& horizons, int res,
                                             double cfl = 0.45);

/// Doubles T from T0 until consecutive estimates differ by less than `tol`
/// or T exceeds T_max; returns the last estimate.
CellEstimate effective_H_large_time_adaptive(const HamiltonianSpec& spec, const Vec3& p, int res,
                                             double tol, double T0 = 10.0, double T_max = 640.0);

struct DiscountOptions {
  double tolerance = 1e-9;       ///< stop when the mean-removed rate is below this
  long max_steps = 50'000'000;
  std::optional<double> warm_start;  ///< guess c for v0 = -c/lambda
  double cfl = 0.45;
};

/// Pseudo-time marching of v_t + lambda v + H(y, p + Dv) = 0 on the torus.
/// With k the mean rate of the last step and r the sup of the mean-removed
/// rate: hbar = -k - lambda (max v + min v)/2 and
/// error_bound = lambda osc(v)/2 + r. At a steady state k = r = 0.
CellEstimate effective_H_discounted(const HamiltonianSpec& spec, const Vec3& p, double lambda,
                                    int res, const DiscountOptions& options = {});

/// I0 = int_0^1 sqrt(2(max V - V)): Hbar = max V exactly for |p| <= I0.
double flat_part_radius_1d(const PeriodicFunction& V);

/// Exact 1D mechanical Hbar: max V on the flat part, otherwise the root
/// lambda of int_0^1 sqrt(2(lambda - V)) = |p|.
double effective_H_1d_mechanical(const PeriodicFunction& V, double p);

/// Hbar'(p) = sign(p) / int_0^1 dy / sqrt(2(Hbar(p) - V)) for |p| > I0.
double effective_gradient_1d(const PeriodicFunction& V, double p);

struct TableOptions {
  double T = 20.0;       ///< large_time horizon
  double lambda = 0.01;  ///< discounted
  int res = 64;
  int threads = 0;
  DiscountOptions discount;
};

/// Tabulates Hbar on p_grid with the chosen method, then the conjugate on
/// q_grid. Any failing node aborts with its p in the message.
EffectiveTable build_effective_table(const HamiltonianSpec& spec, const UniformBox& p_grid,
                                     CellMethod method, const UniformBox& q_grid,
                                     const TableOptions& options = {});

/// Default q box for a spec: [-Q, Q]^n with Q = sup |D_p H| for |p| <= P.
UniformBox default_q_grid(const HamiltonianSpec& spec, double p_max, int n);

/// CSV export of both halves of a table and its JSON manifest.
void write_table_csv(const EffectiveTable& table, std::ostream& hbar_out, std::ostream& lbar_out);
std::string table_manifest_json(const EffectiveTable& table, const TableOptions& options);

}  // namespace hjlab
