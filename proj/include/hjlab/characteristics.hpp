#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hjlab/fields.hpp"
#include "hjlab/hamiltonians.hpp"
#include "hjlab/vec.hpp"

namespace hjlab {

/// Piecewise-linear curve in R^n, stored lifted (never wrapped).
class Curve {
 public:
  Curve() = default;
  /// Throws std::invalid_argument unless times are strictly increasing and
  /// every coordinate is finite.
  Curve(int dim, std::vector<double> times, std::vector<Vec3> points);

  int dim() const { return dim_; }
  std::size_t size() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Vec3>& points() const { return points_; }
  double t_begin() const { return times_.front(); }
  double t_end() const { return times_.back(); }

  /// Linear interpolation; clamps outside [t_begin, t_end].
  Vec3 operator()(double t) const;

 private:
  int dim_ = 1;
  std::vector<double> times_;
  std::vector<Vec3> points_;
};

void write_curve_csv(const Curve& curve, std::ostream& out);

struct ActionAudit {
  double action = 0.0;   ///< int L(xi, xi') + hbar ds
  double pairing = 0.0;  ///< p . (xi(end) - xi(begin))
  double defect = 0.0;   ///< action - pairing
  double horizon = 0.0;  ///< t_end - t_begin
};

std::string audit_json(const ActionAudit& audit);

/// Gauss 3-point rule per segment on L(xi(s), segment velocity). Throws
/// std::domain_error if L is infinite anywhere on a quadrature node.
ActionAudit action_audit(const Curve& curve, const LagrangianView& lagrangian, const Vec3& p,
                         double hbar);

/// Corrector of the 1D mechanical cell problem above the flat part:
/// v'(x) = -p + sign(p) sqrt(2(hbar - V(x))).
class Corrector1D {
 public:
  /// Throws std::domain_error when |p| <= I0 (flat part).
  Corrector1D(PeriodicFunction V, double p);

  double p() const { return p_; }
  double hbar() const { return hbar_; }
  double hbar_slope() const { return slope_; }
  double v_prime(double x) const;
  /// v(x) with v(0) = 0, periodic.
  double v(double x) const;
  double oscillation() const { return osc_; }
  /// v' sampled on Grid(1, res).
  PeriodicField v_prime_field(int res) const;
  const PeriodicFunction& potential() const { return V_; }

 private:
  PeriodicFunction V_;
  double p_;
  double hbar_;
  double slope_;
  std::vector<double> primitive_;  // v at k / n, k = 0..n
  double osc_ = 0.0;
};

/// The corrector derivative of the 1D mechanical cell problem and Hbar(p).
struct CorrectorProfile {
  PeriodicField v_prime;
  double hbar;
};
CorrectorProfile corrector_1d(const PeriodicFunction& V, double p, int res = 1024);

/// Integrates xi' = p + v'(xi) backwards from xi(0) = 0 to t_min < 0 with
/// step-doubling RK4 (local tolerance `tol`). Samples are at most
/// `max_step` apart in time so that the piecewise-linear curve carries the
/// action accurately.
Curve backward_characteristic_1d(const Corrector1D& corrector, double t_min, double tol = 1e-8,
                                 double max_step = 0.01);
Curve backward_characteristic_1d(const PeriodicFunction& V, double p, double t_min);

/// xi(t) = x0 on [t_min, 0]: the characteristic used on the flat part.
Curve stationary_characteristic(int dim, const Vec3& x0, double t_min);

/// Argmax of -L(., 0) = V on a fine grid (mechanical specs): the anchor of
/// the stationary characteristic.
Vec3 flat_part_anchor(const PeriodicFunction& V, int res = 4096);

/// Decay of |(xi(t) - xi(0))/t - slope| along a 1D backward curve.
/// envelope[k] is the sup of the deviation over |t| in [t_abs[k], t_max],
/// with t_abs geometric from t_min to t_max/2. scaled_early / scaled_late are
/// the maxima of |t| times the deviation below / above sqrt(t_min t_max).
struct SlopeDecay {
  std::vector<double> t_abs;
  std::vector<double> envelope;
  double scaled_early = 0.0;
  double scaled_late = 0.0;
};
SlopeDecay slope_decay(const Curve& backward, double slope, double t_min, double t_max, int points = 12);

/// Three-piece curve on [-horizon, 0]: a segment of l1 = R x {0} x {0} at
/// speed 1/delta, a unit-time jump, then l2 translated to x1 = k at speed
/// 1/delta, with k the integer part of -tau*horizon/delta. tau = 1 gives the
/// pure l1 segment. Segments are subdivided to at most `max_length` in space.
Curve hedlund_xi_tau(double tau, double horizon, double delta, double max_length = 0.05);

/// Lift of a circle homeomorphism.
using CircleMap = std::function<double(double)>;

/// Checks strict monotonicity and f(x + 1) = f(x) + 1 on `samples` points
/// of [0, 1); throws std::invalid_argument on a violation.
void check_circle_map(const CircleMap& f, int samples = 256);

/// (f^N(0) - 0) / N after checking f.
double rotation_number(const CircleMap& f, int iterations);

/// max over i in [1, iterations] and sampled x of |f^i(x) - x - i beta|.
double circle_control_defect(const CircleMap& f, double beta, int iterations, int samples = 16);

}  // namespace hjlab
