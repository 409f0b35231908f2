#include "hjlab/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hjlab/cell.hpp"

namespace hjlab {

namespace {

constexpr int kPrimitiveNodes = 16384;

// Integer part with values within rounding of an integer snapped to it first,
// so that e.g. 0.25 * 1000 / 0.1 is treated as exactly 2500.
double integer_part(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return r;
  return std::trunc(x);
}

void append_piece(std::vector<double>& times, std::vector<Vec3>& points, double t0, double t1,
                  const std::function<Vec3(double)>& xi, double length, double max_length) {
  if (!(t1 > t0)) return;
  // Power-of-two counts keep the sample times exact for dyadic spans, so
  // segment velocities carry no rounding into the (one-sided) Lagrangian.
  int pieces = 1;
  while (pieces < length / max_length - 1e-12) pieces *= 2;
  for (int i = times.empty() ? 0 : 1; i <= pieces; ++i) {
    const double t = i == pieces ? t1 : t0 + (t1 - t0) * i / pieces;
    times.push_back(t);
    points.push_back(xi(t));
  }
}

}  // namespace

Curve::Curve(int dim, std::vector<double> times, std::vector<Vec3> points)
    : dim_(dim), times_(std::move(times)), points_(std::move(points)) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("curve dimension must be 1, 2 or 3");
  if (times_.size() != points_.size() || times_.size() < 2) {
    throw std::invalid_argument("a curve needs at least two matching samples");
  }
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i])) throw std::invalid_argument("curve times must be finite");
    if (i > 0 && !(times_[i] > times_[i - 1])) {
      throw std::invalid_argument("curve times must be strictly increasing");
    }
    for (double c : points_[i]) {
      if (!std::isfinite(c)) throw std::invalid_argument("curve points must be finite");
    }
  }
}

Vec3 Curve::operator()(double t) const {
  if (t <= times_.front()) return points_.front();
  if (t >= times_.back()) return points_.back();
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - times_.begin());
  const double f = (t - times_[j - 1]) / (times_[j] - times_[j - 1]);
  return points_[j - 1] + f * (points_[j] - points_[j - 1]);
}

void write_curve_csv(const Curve& curve, std::ostream& out) {
  out << "t";
  for (int d = 0; d < curve.dim(); ++d) out << ",x" << d + 1;
  out << "\n";
  out.precision(17);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << curve.times()[i];
    for (int d = 0; d < curve.dim(); ++d) out << "," << curve.points()[i][static_cast<std::size_t>(d)];
    out << "\n";
  }
}

std::string audit_json(const ActionAudit& audit) {
  nlohmann::ordered_json j;
  j["action"] = audit.action;
  j["pairing"] = audit.pairing;
  j["defect"] = audit.defect;
  j["horizon"] = audit.horizon;
  return j.dump(2);
}

ActionAudit action_audit(const Curve& curve, const LagrangianView& lagrangian, const Vec3& p,
                         double hbar) {
  static const double node = std::sqrt(3.0 / 5.0);
  static const double offsets[3] = {-node, 0.0, node};
  static const double weights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

  const auto& ts = curve.times();
  const auto& xs = curve.points();
  // Neumaier summation: long horizons add ~10^5 segment contributions.
  double action = 0.0;
  double carry = 0.0;
  for (std::size_t j = 1; j < ts.size(); ++j) {
    const double dt = ts[j] - ts[j - 1];
    const Vec3 q = (1.0 / dt) * (xs[j] - xs[j - 1]);
    double seg = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double f = 0.5 * (1.0 + offsets[k]);
      const double l = lagrangian(xs[j - 1] + f * (xs[j] - xs[j - 1]), q);
      if (!std::isfinite(l)) {
        std::ostringstream msg;
        msg << "Lagrangian is infinite on the segment starting at t = " << ts[j - 1];
        throw std::domain_error(msg.str());
      }
      seg += weights[k] * l;
    }
    const double term = 0.5 * dt * seg;
    const double sum = action + term;
    carry += std::abs(action) >= std::abs(term) ? (action - sum) + term : (term - sum) + action;
    action = sum;
  }
  ActionAudit audit;
  audit.action = action + carry + hbar * (ts.back() - ts.front());
  audit.pairing = dot(p, xs.back() - xs.front());
  audit.defect = audit.action - audit.pairing;
  audit.horizon = ts.back() - ts.front();
  return audit;
}

Corrector1D::Corrector1D(PeriodicFunction V, double p) : V_(std::move(V)), p_(p) {
  if (V_.dim() != 1) throw std::invalid_argument("1D potential required");
  // Throws std::domain_error on the flat part.
  slope_ = effective_gradient_1d(V_, p);
  hbar_ = effective_H_1d_mechanical(V_, p);

  const int n = kPrimitiveNodes;
  primitive_.assign(static_cast<std::size_t>(n) + 1, 0.0);
  const double h = 1.0 / n;
  double lo = 0.0;
  double hi = 0.0;
  for (int k = 0; k < n; ++k) {
    const double a = k * h;
    const double s = v_prime(a) + 4.0 * v_prime(a + 0.5 * h) + v_prime(a + h);
    primitive_[static_cast<std::size_t>(k) + 1] = primitive_[static_cast<std::size_t>(k)] + h * s / 6.0;
    lo = std::min(lo, primitive_[static_cast<std::size_t>(k) + 1]);
    hi = std::max(hi, primitive_[static_cast<std::size_t>(k) + 1]);
  }
  osc_ = hi - lo;
}

double Corrector1D::v_prime(double x) const {
  const double r = std::sqrt(2.0 * std::max(hbar_ - V_(Vec3{x, 0, 0}), 0.0));
  return -p_ + (p_ > 0 ? r : -r);
}

double Corrector1D::v(double x) const {
  const double cell = std::floor(x);
  const double frac = x - cell;
  const int n = kPrimitiveNodes;
  const int k = std::min(n - 1, static_cast<int>(frac * n));
  const double a = static_cast<double>(k) / n;
  const double w = frac - a;
  const double part = w * (v_prime(a) + 4.0 * v_prime(a + 0.5 * w) + v_prime(frac)) / 6.0;
  return cell * primitive_.back() + primitive_[static_cast<std::size_t>(k)] + part;
}

PeriodicField Corrector1D::v_prime_field(int res) const {
  return sample([this](const Vec3& y) { return v_prime(y[0]); }, Grid(1, res));
}

CorrectorProfile corrector_1d(const PeriodicFunction& V, double p, int res) {
  const Corrector1D c(V, p);
  return {c.v_prime_field(res), c.hbar()};
}

Curve backward_characteristic_1d(const Corrector1D& corrector, double t_min, double tol,
                                 double max_step) {
  if (!(t_min < 0.0)) throw std::invalid_argument("t_min must be negative");
  if (!(tol > 0.0 && max_step > 0.0)) throw std::invalid_argument("bad integration controls");
  auto f = [&](double x) { return corrector.p() + corrector.v_prime(x); };
  auto rk4 = [&](double x, double h) {
    const double k1 = f(x);
    const double k2 = f(x + 0.5 * h * k1);
    const double k3 = f(x + 0.5 * h * k2);
    const double k4 = f(x + h * k3);
    return x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
  };

  std::vector<double> times{0.0};
  std::vector<Vec3> points{Vec3{0, 0, 0}};
  double t = 0.0;
  double x = 0.0;
  double h = max_step;
  while (t > t_min) {
    h = std::min({h, max_step, t - t_min});
    const double full = rk4(x, -h);
    const double half = rk4(rk4(x, -0.5 * h), -0.5 * h);
    const double err = std::abs(half - full) / 15.0;
    if (err <= tol || h < 1e-12) {
      t = (h == t - t_min) ? t_min : t - h;
      x = half + (half - full) / 15.0;
      times.push_back(t);
      points.push_back(Vec3{x, 0, 0});
    }
    const double grow = err > 0.0 ? 0.9 * std::pow(tol / err, 0.2) : 2.0;
    h *= std::clamp(grow, 0.2, 2.0);
  }
  std::reverse(times.begin(), times.end());
  std::reverse(points.begin(), points.end());
  return Curve(1, std::move(times), std::move(points));
}

Curve backward_characteristic_1d(const PeriodicFunction& V, double p, double t_min) {
  return backward_characteristic_1d(Corrector1D(V, p), t_min);
}

Curve stationary_characteristic(int dim, const Vec3& x0, double t_min) {
  if (!(t_min < 0.0)) throw std::invalid_argument("t_min must be negative");
  return Curve(dim, {t_min, 0.0}, {x0, x0});
}

Vec3 flat_part_anchor(const PeriodicFunction& V, int res) {
  if (V.dim() != 1) throw std::invalid_argument("1D potential required");
  double best = -kInfinity;
  double arg = 0.0;
  for (int i = 0; i < res; ++i) {
    const double x = static_cast<double>(i) / res;
    const double v = V(Vec3{x, 0, 0});
    if (v > best) {
      best = v;
      arg = x;
    }
  }
  // Golden-section polish inside the neighbouring cells.
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = arg - 1.0 / res;
  double b = arg + 1.0 / res;
  for (int it = 0; it < 60; ++it) {
    const double c = b - g * (b - a);
    const double d = a + g * (b - a);
    if (V(Vec3{c, 0, 0}) > V(Vec3{d, 0, 0})) {
      b = d;
    } else {
      a = c;
    }
  }
  return Vec3{0.5 * (a + b), 0, 0};
}

SlopeDecay slope_decay(const Curve& backward, double slope, double t_min, double t_max, int points) {
  if (!(t_min > 0.0 && t_max > 2.0 * t_min) || points < 2) {
    throw std::invalid_argument("slope_decay needs 0 < 2 t_min < t_max and two points");
  }
  if (backward.t_begin() > -t_max || backward.t_end() < 0.0) {
    throw std::invalid_argument("curve does not cover [-t_max, 0]");
  }
  const Vec3 origin = backward(0.0);
  const double split = std::sqrt(t_min * t_max);
  // (|t|, deviation) at the curve's own nodes inside the range.
  std::vector<std::pair<double, double>> dev;
  for (std::size_t i = 0; i < backward.size(); ++i) {
    const double t = backward.times()[i];
    if (-t < t_min || -t > t_max) continue;
    const Vec3 d = (1.0 / t) * (backward.points()[i] - origin);
    dev.emplace_back(-t, std::abs(d[0] - slope));
  }
  SlopeDecay out;
  for (const auto& [a, e] : dev) {
    double& slot = a < split ? out.scaled_early : out.scaled_late;
    slot = std::max(slot, a * e);
  }
  const double ratio = std::pow(0.5 * t_max / t_min, 1.0 / (points - 1));
  for (int k = 0; k < points; ++k) {
    const double a = t_min * std::pow(ratio, k);
    double sup = 0.0;
    for (const auto& [b, e] : dev) {
      if (b >= a) sup = std::max(sup, e);
    }
    out.t_abs.push_back(a);
    out.envelope.push_back(sup);
  }
  return out;
}

Curve hedlund_xi_tau(double tau, double horizon, double delta, double max_length) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in [0, 1]");
  if (!(horizon >= 2.0)) throw std::invalid_argument("horizon must be at least 2");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (!(max_length > 0.0)) throw std::invalid_argument("max_length must be positive");

  const double speed = 1.0 / delta;
  std::vector<double> times;
  std::vector<Vec3> points;
  auto on_l1 = [speed](double s) { return Vec3{s * speed, 0.0, 0.0}; };

  if (tau == 1.0) {
    append_piece(times, points, -horizon, 0.0, on_l1, horizon * speed, max_length);
    return Curve(3, std::move(times), std::move(points));
  }

  const double s1 = -tau * horizon;  // start of the l1 piece
  const double s0 = s1 - 1.0;        // start of the jump
  if (s0 < -horizon - 1e-12) {
    throw std::invalid_argument("horizon too short to fit the unit-time jump");
  }
  const double k = integer_part(s1 * speed);
  const Vec3 a = on_l1(s1);
  const Vec3 b{k, 0.0, 0.5};
  const Vec3 jump = a - b;
  auto on_l2 = [k, speed, s0](double s) { return Vec3{k, (s - s0) * speed, 0.5}; };
  auto across = [a, jump, s1](double s) { return a + (s - s1) * jump; };

  append_piece(times, points, -horizon, s0, on_l2, (s0 + horizon) * speed, max_length);
  append_piece(times, points, s0, s1, across, norm(jump), max_length);
  append_piece(times, points, s1, 0.0, on_l1, -s1 * speed, max_length);
  return Curve(3, std::move(times), std::move(points));
}

void check_circle_map(const CircleMap& f, int samples) {
  if (samples < 2) throw std::invalid_argument("need at least two samples");
  double prev = f(0.0);
  for (int i = 1; i <= samples; ++i) {
    const double x = static_cast<double>(i) / samples;
    const double fx = f(x);
    if (!(fx > prev)) throw std::invalid_argument("circle map is not strictly increasing");
    prev = fx;
    const double x0 = x - 1.0 / samples;
    if (std::abs(f(x0 + 1.0) - f(x0) - 1.0) > 1e-9) {
      throw std::invalid_argument("circle map does not commute with the unit shift");
    }
  }
}

double rotation_number(const CircleMap& f, int iterations) {
  if (iterations < 100) throw std::invalid_argument("rotation number needs at least 100 iterations");
  check_circle_map(f);
  double x = 0.0;
  for (int i = 0; i < iterations; ++i) x = f(x);
  return x / iterations;
}

double circle_control_defect(const CircleMap& f, double beta, int iterations, int samples) {
  double worst = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double x = static_cast<double>(j) / samples;
    double y = x;
    for (int i = 1; i <= iterations; ++i) {
      y = f(y);
      worst = std::max(worst, std::abs(y - x - i * beta));
    }
  }
  return worst;
}

}  // namespace hjlab
