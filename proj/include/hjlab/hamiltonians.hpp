#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hjlab/fields.hpp"
#include "hjlab/vec.hpp"

namespace hjlab {

/// A Z^n-periodic scalar coefficient, either in closed form or backed by a
/// sampled PeriodicField. Carries cached lower/upper bounds.
class PeriodicFunction {
 public:
  /// Closed form; bounds are taken from a dense sample unless given.
  PeriodicFunction(int dim, std::string name, PointFunction f,
                   std::optional<std::pair<double, double>> bounds = std::nullopt);
  explicit PeriodicFunction(PeriodicField field, std::string name = "field");

  static PeriodicFunction constant(int dim, double value);

  double operator()(const Vec3& y) const { return eval_(y); }
  int dim() const { return dim_; }
  const std::string& name() const { return name_; }
  double min() const { return min_; }
  double max() const { return max_; }
  bool is_constant() const { return min_ == max_; }
  /// Non-null when backed by a sampled field.
  const PeriodicField* field() const { return field_.get(); }

 private:
  int dim_;
  std::string name_;
  PointFunction eval_;
  std::shared_ptr<const PeriodicField> field_;
  double min_ = 0.0;
  double max_ = 0.0;
};

/// H = |p|^2/2 + V(y)
struct Mechanical {
  PeriodicFunction potential;
};

/// H = |p|^k / a(y), a > 0
struct HomogeneousK {
  PeriodicFunction speed;
  double degree = 1.0;
};

/// H = |p| / a(y) with a in [delta, 1 + delta]
struct HedlundMetric {
  PeriodicFunction metric;
  double delta = 0.1;
};

/// Arbitrary convex evaluator H(y, p).
struct Custom {
  std::function<double(const Vec3&, const Vec3&)> eval;
  std::string name = "custom";
  bool y_independent = false;
};

/// Quadratic envelope used beyond |p| = c0 (see clamp_quadratic).
struct QuadraticClamp {
  double c0 = 0.0;
  double k0 = 0.0;
  double slope = 0.0;  ///< sup over y of the radial slope at |p| = c0
};

class HamiltonianSpec {
 public:
  using Kind = std::variant<Mechanical, HomogeneousK, HedlundMetric, Custom>;

  HamiltonianSpec(int dim, Kind kind);

  static HamiltonianSpec mechanical(PeriodicFunction potential);
  static HamiltonianSpec homogeneous(PeriodicFunction speed, double degree);
  static HamiltonianSpec hedlund(PeriodicFunction metric, double delta);
  static HamiltonianSpec custom(int dim, std::function<double(const Vec3&, const Vec3&)> eval,
                                std::string name, bool y_independent);

  int dim() const { return dim_; }
  const Kind& kind() const { return kind_; }
  const std::optional<QuadraticClamp>& clamp() const { return clamp_; }
  std::string describe() const;

  /// Catalog kinds are functions of (coefficient(y), |p|).
  bool is_radial() const { return tag_ != Tag::custom; }
  bool is_mechanical() const { return tag_ == Tag::mechanical; }
  const PeriodicFunction& coefficient() const;
  bool y_independent() const;
  /// Degree of positive homogeneity in p, when the (unclamped) spec has one.
  std::optional<double> homogeneity_degree() const;

  /// Radial profile phi(c, r) including the clamp, for catalog kinds.
  double radial(double c, double r) const {
    if (clamp_ && r > clamp_->c0) {
      const double lin = raw_radial(c, clamp_->c0) + clamp_->slope * (r - clamp_->c0);
      const double quad = 0.5 * r * r - clamp_->k0;
      return lin > quad ? lin : quad;
    }
    return raw_radial(c, r);
  }
  /// d phi / d r, right derivative at the clamp splice.
  double radial_slope(double c, double r) const;

  double operator()(const Vec3& y, const Vec3& p) const;

  /// sup_y H(y, p) and inf_y H(y, p) for |p| = r (radial kinds exactly,
  /// custom kinds by sampling).
  double sup_over_y(double r) const;
  double inf_over_y(double r) const;
  /// sup over y and |p| <= r of |D_p H|.
  double sup_slope(double r) const;

  // Internal: used by clamp_quadratic.
  void set_clamp(QuadraticClamp clamp) { clamp_ = clamp; }

 private:
  enum class Tag { mechanical, homogeneous, hedlund, custom };

  double raw_radial(double c, double r) const {
    switch (tag_) {
      case Tag::mechanical:
        return 0.5 * r * r + c;
      case Tag::homogeneous:
        return (degree_ == 1.0 ? r : std::pow(r, degree_)) / c;
      case Tag::hedlund:
        return r / c;
      case Tag::custom:
        break;
    }
    return 0.0;
  }
  double raw_slope(double c, double r) const;
  double custom_eval(const Vec3& y, const Vec3& p) const;

  int dim_;
  Kind kind_;
  Tag tag_;
  double degree_ = 2.0;
  std::optional<QuadraticClamp> clamp_;
};

double eval_H(const HamiltonianSpec& spec, const Vec3& y, const Vec3& p);

/// Replaces H for |p| > c0 by max(H(y, c0 p/|p|) + m(|p| - c0), |p|^2/2 - k0)
/// with m the sup over y of the radial slope at c0. Throws
/// std::invalid_argument when k0 <= 1 or when the envelope
/// |p|^2/2 - k0 <= H <= |p|^2/2 + k0 fails.
HamiltonianSpec clamp_quadratic(const HamiltonianSpec& spec, double c0, double k0);

/// Lagrangian of a spec: closed form when available, otherwise the numeric
/// conjugate sup_p {p.q - H(y,p)}.
class LagrangianView {
 public:
  explicit LagrangianView(const HamiltonianSpec& spec, double p_max = 0.0);

  /// Returns +infinity where the conjugate is infinite.
  double operator()(const Vec3& y, const Vec3& q) const;
  bool closed_form() const { return closed_form_; }
  double p_max() const { return p_max_; }
  const HamiltonianSpec& spec() const { return *spec_; }

 private:
  std::shared_ptr<const HamiltonianSpec> spec_;
  double p_max_;
  bool closed_form_;
};

double eval_L(const LagrangianView& view, const Vec3& y, const Vec3& q);

/// C^2 Z^3-periodic metric with a = delta exactly on
/// l1 = R x {0} x {0}, l2 = {0} x R x {1/2}, l3 = {1/2} x {1/2} x R,
/// delta <= a <= 1 + delta, a = 1 + delta outside the tube_radius
/// neighbourhood of the lines.
PeriodicFunction hedlund_metric(double delta, double tube_radius);
PeriodicField build_hedlund_metric(double delta, double tube_radius, int res);
/// Euclidean distance on T^3 from y to the union of the three Hedlund lines.
double hedlund_line_distance(const Vec3& y);

/// V = -beta d1 d2 d3 where d_i = sum of sin^2(pi * transverse offset) of
/// line L_i: L1 = (t,1/2,0), L2 = (0,t,1/2), L3 = (1/2,0,t). {V = 0} is
/// exactly L1 u L2 u L3 (mod Z^3).
PeriodicFunction line_potential(double beta);
PeriodicField build_line_potential(double beta, int res);
/// Offsets of y from line `i` (1-based) in its two transverse coordinates.
std::pair<double, double> line_offsets(int line, const Vec3& y);

/// Discrete Legendre-Fenchel transform of a tabulated convex function.
struct ConjugateTable {
  UniformBox q_grid;
  std::vector<double> values;     ///< +inf where the max sits on the p-box boundary
  std::vector<char> boundary;     ///< 1 where the sentinel applies
};

ConjugateTable legendre_table(const UniformBox& p_grid, const std::vector<double>& hbar,
                              const UniformBox& q_grid);

/// Conjugate of the finite part of a ConjugateTable, evaluated on p_grid.
std::vector<double> conjugate_back(const ConjugateTable& lbar, const UniformBox& p_grid);

/// Tabulated effective Hamiltonian with its Legendre transform.
struct EffectiveTable {
  UniformBox p_grid;
  std::vector<double> hbar;
  std::vector<double> hbar_error;
  UniformBox q_grid;
  std::vector<double> lbar;
  std::vector<char> lbar_boundary;
  std::string method;
  /// Midpoint-convexity scan: second differences below -2*(error bounds).
  int convexity_violations = 0;
  double worst_second_difference = 0.0;

  double hbar_at(const Vec3& p) const;
  /// +inf when any interpolation corner is a sentinel or q is off the table.
  double lbar_at(const Vec3& q) const;
};

}  // namespace hjlab
