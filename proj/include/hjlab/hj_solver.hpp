#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjlab/fields.hpp"
#include "hjlab/hamiltonians.hpp"
#include "hjlab/vec.hpp"

namespace hjlab {

enum class DomainKind { torus, box };

/// Numerical Hamiltonian. `upwind` is the Rouy-Tourin flux
/// phi(c, |(max(P-_i, -P+_i, 0))_i|) and needs a radial spec; `automatic`
/// picks it for radial specs and Lax-Friedrichs otherwise.
enum class FluxKind { automatic, lax_friedrichs, upwind };

/// Discretization parameters. Zero sigma / gradient_bound are derived from
/// the Hamiltonian and the data (see solve_oscillatory and Stepper).
struct SchemeConfig {
  double h = 0.0;
  double cfl = 0.45;
  Vec3 sigma{0.0, 0.0, 0.0};
  double gradient_bound = 0.0;
  DomainKind domain = DomainKind::torus;
  double length = 1.0;  ///< torus period
  double radius = 0.0;  ///< box half-width R
  FluxKind flux = FluxKind::automatic;
};

/// Node layout for a SchemeConfig. Torus nodes sit at i*h, i < n; box nodes
/// at -R + i*h, i <= 2R/h.
struct Mesh {
  int dim = 1;
  int n = 0;
  double lo = 0.0;
  double h = 0.0;
  bool periodic = true;

  std::size_t size() const;
  Vec3 node(std::size_t flat) const;
  std::array<long, 3> multi_index(std::size_t flat) const;
};

Mesh make_mesh(int dim, const SchemeConfig& config);

class CflViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lax-Friedrichs flux H(y, (pm+pp)/2) - sum_i sigma_i (pp_i - pm_i)/2.
double numerical_hamiltonian(const HamiltonianSpec& spec, const Vec3& y, const Vec3& p_minus,
                             const Vec3& p_plus, const Vec3& sigma);

/// Upwind flux phi(c(y), |g|) with g_i = max(p_minus_i, -p_plus_i, 0).
double upwind_hamiltonian(const HamiltonianSpec& spec, const Vec3& y, const Vec3& p_minus,
                          const Vec3& p_plus);

/// sup{ r : inf_y H(y, p) <= level for some |p| = r }. Gradients of solutions
/// whose time derivative stays in [-level, level] cannot exceed it.
double coercivity_radius(const HamiltonianSpec& spec, double level);

/// A-priori bound on |Du| for u_t + H(y, shift + Du) = 0 with data of
/// Lipschitz constant lip (shift included in the returned norm).
double a_priori_gradient_bound(const HamiltonianSpec& spec, double lip, const Vec3& shift = {});

/// Forward-Euler step of u_t + lambda u + H(x/eps, shift + Du) = 0 with the
/// discount treated implicitly: u' = (u - dt NumH) / (1 + lambda dt).
class Stepper {
 public:
  Stepper(const HamiltonianSpec& spec, const SchemeConfig& config, double eps,
          Vec3 shift = {}, double lambda = 0.0);

  const Mesh& mesh() const { return mesh_; }
  const SchemeConfig& config() const { return config_; }
  double dt() const { return dt_; }

  /// Writes the update into `out`; returns the largest norm of
  /// shift + (D-u + D+u)/2 seen on `u`. Throws CflViolation if that exceeds
  /// the configured gradient bound.
  double step(const std::vector<double>& u, std::vector<double>& out, double dt) const;
  double step(const std::vector<double>& u, std::vector<double>& out) const {
    return step(u, out, dt_);
  }

  /// Local flux NumH at every node (no time update).
  void flux(const std::vector<double>& u, std::vector<double>& out, double& grad_max) const;

 private:
  template <int Dim, bool Upwind>
  void flux_impl(const std::vector<double>& u, std::vector<double>& out, double& grad_max) const;

  HamiltonianSpec spec_;
  SchemeConfig config_;
  Mesh mesh_;
  double eps_;
  Vec3 shift_;
  double lambda_;
  double dt_;
  bool upwind_;
  std::vector<double> coeff_;  // c(x/eps) per node for radial kinds
  std::vector<Vec3> y_;        // x/eps per node for custom kinds
};

/// Derives sigma and dt for a spec and gradient bound.
SchemeConfig finalize_config(const HamiltonianSpec& spec, SchemeConfig config, double gradient_bound);

/// Single step u -> u' on the mesh of `config` (sigma/gradient_bound must be set).
std::vector<double> step(const std::vector<double>& u, const HamiltonianSpec& spec, double eps,
                         const SchemeConfig& config);

struct SpaceTimeSolution {
  Mesh mesh;
  std::vector<double> times;
  std::vector<std::vector<double>> layers;  ///< u at each stored time
  SchemeConfig config;
  double eps = 1.0;
  double dt = 0.0;
  std::string spec_description;
  std::optional<QuadraticClamp> clamp;
  std::vector<double> lipschitz_record;     ///< per step
  /// Point-sampled solutions (Hopf-Lax) store layers[k][s] = u(sample s, times[k])
  /// and the minimizer y0 per sample instead of a mesh.
  std::vector<Vec3> sample_points;
  std::vector<std::vector<Vec3>> minimizers;

  /// Interpolated value of the layer stored at times[k].
  double value(std::size_t k, const Vec3& x) const;
  double max_gradient() const;
};

/// Solves u_t + H(x/eps, Du) = 0, u(.,0) = g on the configured domain and
/// stores layers at `times` (ascending, > 0). Requires h <= eps/16.
SpaceTimeSolution solve_oscillatory(const HamiltonianSpec& spec,
                                    const std::function<double(const Vec3&)>& g, double lip_g,
                                    double eps, const std::vector<double>& times,
                                    SchemeConfig config);

/// CSV (coordinates, t, u) and JSON manifest export.
void write_solution_csv(const SpaceTimeSolution& sol, std::ostream& out);
std::string solution_manifest_json(const SpaceTimeSolution& sol);

}  // namespace hjlab
