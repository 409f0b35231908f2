#include "hjlab/hamiltonians.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hjlab {

namespace {

std::pair<double, double> sampled_bounds(int dim, const PointFunction& f) {
  const int res = dim == 1 ? 4096 : dim == 2 ? 256 : 64;
  const Grid grid(dim, res);
  double lo = kInfinity;
  double hi = -kInfinity;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = f(grid.node(i));
    if (!std::isfinite(v)) throw std::domain_error("coefficient is not finite");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

// Unit directions used to probe non-radial evaluators.
std::vector<Vec3> probe_directions(int dim) {
  std::vector<Vec3> dirs;
  if (dim == 1) {
    dirs = {Vec3{1, 0, 0}, Vec3{-1, 0, 0}};
  } else if (dim == 2) {
    const int n = 64;
    for (int k = 0; k < n; ++k) {
      const double th = 2.0 * kPi * k / n;
      dirs.push_back({std::cos(th), std::sin(th), 0.0});
    }
  } else {
    const int n = 200;
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / n;
      const double rho = std::sqrt(1.0 - z * z);
      dirs.push_back({rho * std::cos(golden * k), rho * std::sin(golden * k), z});
    }
    for (int i = 0; i < 3; ++i) {
      dirs.push_back(unit(i));
      dirs.push_back(-1.0 * unit(i));
    }
  }
  return dirs;
}

std::vector<Vec3> probe_points(int dim, bool y_independent) {
  if (y_independent) return {Vec3{0, 0, 0}};
  const Grid grid(dim, dim == 3 ? 6 : 12);
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < grid.size(); ++i) pts.push_back(grid.node(i));
  return pts;
}

// Maximizes a concave function of r on [0, hi] (golden section plus ends).
template <class F>
double maximize_concave(F&& f, double hi) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0;
  double b = hi;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && b - a > 1e-14 * (1.0 + hi); ++it) {
    if (fc < fd) {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    } else {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    }
  }
  return std::max({fc, fd, f(0.0), f(hi), f(0.5 * (a + b))});
}

double quintic_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
}

// Distance on the 2-torus from (u, v) to (u0, v0).
double torus_dist2(double u, double v, double u0, double v0) {
  auto wrap = [](double s) {
    s -= std::floor(s);
    return std::min(s, 1.0 - s);
  };
  const double du = wrap(u - u0);
  const double dv = wrap(v - v0);
  return std::sqrt(du * du + dv * dv);
}

double sin2(double x) {
  const double s = std::sin(kPi * x);
  return s * s;
}

}  // namespace

PeriodicFunction::PeriodicFunction(int dim, std::string name, PointFunction f,
                                   std::optional<std::pair<double, double>> bounds)
    : dim_(dim), name_(std::move(name)), eval_(std::move(f)) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("coefficient dimension must be 1, 2 or 3");
  const auto [lo, hi] = bounds ? *bounds : sampled_bounds(dim, eval_);
  min_ = lo;
  max_ = hi;
}

PeriodicFunction::PeriodicFunction(PeriodicField field, std::string name)
    : dim_(field.grid().dim()), name_(std::move(name)) {
  auto shared = std::make_shared<const PeriodicField>(std::move(field));
  field_ = shared;
  min_ = shared->min();
  max_ = shared->max();
  eval_ = [shared](const Vec3& y) { return interp(*shared, y); };
}

PeriodicFunction PeriodicFunction::constant(int dim, double value) {
  std::ostringstream name;
  name << "const(" << value << ")";
  return PeriodicFunction(
      dim, name.str(), [value](const Vec3&) { return value; }, std::make_pair(value, value));
}

HamiltonianSpec::HamiltonianSpec(int dim, Kind kind) : dim_(dim), kind_(std::move(kind)) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("spec dimension must be 1, 2 or 3");
  if (const auto* m = std::get_if<Mechanical>(&kind_)) {
    tag_ = Tag::mechanical;
    if (m->potential.dim() != dim) throw std::invalid_argument("potential dimension mismatch");
  } else if (const auto* h = std::get_if<HomogeneousK>(&kind_)) {
    tag_ = Tag::homogeneous;
    degree_ = h->degree;
    if (!(h->degree >= 1.0)) throw std::invalid_argument("homogeneity degree must be >= 1");
    if (!(h->speed.min() > 0.0)) throw std::invalid_argument("speed a(y) must be positive");
    if (h->speed.dim() != dim) throw std::invalid_argument("speed dimension mismatch");
  } else if (const auto* hm = std::get_if<HedlundMetric>(&kind_)) {
    tag_ = Tag::hedlund;
    degree_ = 1.0;
    if (dim != 3) throw std::invalid_argument("Hedlund metric lives on T^3");
    if (!(hm->metric.min() > 0.0)) throw std::invalid_argument("metric a(y) must be positive");
  } else {
    tag_ = Tag::custom;
    if (!std::get<Custom>(kind_).eval) throw std::invalid_argument("custom spec needs an evaluator");
  }
}

HamiltonianSpec HamiltonianSpec::mechanical(PeriodicFunction potential) {
  const int dim = potential.dim();
  return HamiltonianSpec(dim, Mechanical{std::move(potential)});
}

HamiltonianSpec HamiltonianSpec::homogeneous(PeriodicFunction speed, double degree) {
  const int dim = speed.dim();
  return HamiltonianSpec(dim, HomogeneousK{std::move(speed), degree});
}

HamiltonianSpec HamiltonianSpec::hedlund(PeriodicFunction metric, double delta) {
  return HamiltonianSpec(3, HedlundMetric{std::move(metric), delta});
}

HamiltonianSpec HamiltonianSpec::custom(int dim,
                                        std::function<double(const Vec3&, const Vec3&)> eval,
                                        std::string name, bool y_independent) {
  return HamiltonianSpec(dim, Custom{std::move(eval), std::move(name), y_independent});
}

std::string HamiltonianSpec::describe() const {
  std::ostringstream out;
  switch (tag_) {
    case Tag::mechanical:
      out << "mechanical(V=" << coefficient().name() << ")";
      break;
    case Tag::homogeneous:
      out << "homogeneous(k=" << degree_ << ", a=" << coefficient().name() << ")";
      break;
    case Tag::hedlund:
      out << "hedlund(delta=" << std::get<HedlundMetric>(kind_).delta << ")";
      break;
    case Tag::custom:
      out << "custom(" << std::get<Custom>(kind_).name << ")";
      break;
  }
  if (clamp_) out << " clamped(C0=" << clamp_->c0 << ", K0=" << clamp_->k0 << ")";
  return out.str();
}

const PeriodicFunction& HamiltonianSpec::coefficient() const {
  switch (tag_) {
    case Tag::mechanical:
      return std::get<Mechanical>(kind_).potential;
    case Tag::homogeneous:
      return std::get<HomogeneousK>(kind_).speed;
    case Tag::hedlund:
      return std::get<HedlundMetric>(kind_).metric;
    case Tag::custom:
      break;
  }
  throw std::logic_error("custom spec has no radial coefficient");
}

bool HamiltonianSpec::y_independent() const {
  if (tag_ == Tag::custom) return std::get<Custom>(kind_).y_independent;
  return coefficient().is_constant();
}

std::optional<double> HamiltonianSpec::homogeneity_degree() const {
  if (clamp_) return std::nullopt;
  if (tag_ == Tag::homogeneous || tag_ == Tag::hedlund) return degree_;
  return std::nullopt;
}

double HamiltonianSpec::raw_slope(double c, double r) const {
  switch (tag_) {
    case Tag::mechanical:
      return r;
    case Tag::homogeneous:
      return degree_ == 1.0 ? 1.0 / c : degree_ * std::pow(r, degree_ - 1.0) / c;
    case Tag::hedlund:
      return 1.0 / c;
    case Tag::custom:
      break;
  }
  return 0.0;
}

double HamiltonianSpec::radial_slope(double c, double r) const {
  if (clamp_ && r > clamp_->c0) {
    const double lin = raw_radial(c, clamp_->c0) + clamp_->slope * (r - clamp_->c0);
    const double quad = 0.5 * r * r - clamp_->k0;
    return lin >= quad ? clamp_->slope : r;
  }
  return raw_slope(c, r);
}

double HamiltonianSpec::custom_eval(const Vec3& y, const Vec3& p) const {
  const auto& fn = std::get<Custom>(kind_).eval;
  if (clamp_) {
    const double r = norm(p);
    if (r > clamp_->c0) {
      const Vec3 p0 = (clamp_->c0 / r) * p;
      const double lin = fn(y, p0) + clamp_->slope * (r - clamp_->c0);
      const double quad = 0.5 * r * r - clamp_->k0;
      return std::max(lin, quad);
    }
  }
  return fn(y, p);
}

double HamiltonianSpec::operator()(const Vec3& y, const Vec3& p) const {
  if (tag_ == Tag::custom) return custom_eval(y, p);
  return radial(coefficient()(y), norm(p));
}

double HamiltonianSpec::sup_over_y(double r) const {
  if (tag_ != Tag::custom) {
    const auto& c = coefficient();
    return std::max(radial(c.min(), r), radial(c.max(), r));
  }
  double best = -kInfinity;
  for (const auto& y : probe_points(dim_, y_independent())) {
    for (const auto& d : probe_directions(dim_)) best = std::max(best, custom_eval(y, r * d));
  }
  return best;
}

double HamiltonianSpec::inf_over_y(double r) const {
  if (tag_ != Tag::custom) {
    const auto& c = coefficient();
    return std::min(radial(c.min(), r), radial(c.max(), r));
  }
  double best = kInfinity;
  for (const auto& y : probe_points(dim_, y_independent())) {
    for (const auto& d : probe_directions(dim_)) best = std::min(best, custom_eval(y, r * d));
  }
  return best;
}

double HamiltonianSpec::sup_slope(double r) const {
  if (tag_ != Tag::custom) {
    const auto& c = coefficient();
    // Radial profiles are convex in r, so the slope is largest at r itself.
    return std::max(radial_slope(c.min(), r), radial_slope(c.max(), r));
  }
  // Finite-difference probe; evaluators are convex so the outer shell is
  // where the slope peaks along each ray.
  double best = 0.0;
  const double step = 1e-6 * std::max(1.0, r);
  for (const auto& y : probe_points(dim_, y_independent())) {
    for (const auto& d : probe_directions(dim_)) {
      for (double s : {0.0, 0.5 * r, r}) {
        const Vec3 p = s * d;
        Vec3 grad{0, 0, 0};
        for (int i = 0; i < dim_; ++i) {
          const Vec3 e = step * unit(i);
          grad[static_cast<std::size_t>(i)] =
              (custom_eval(y, p + e) - custom_eval(y, p - e)) / (2.0 * step);
        }
        best = std::max(best, norm(grad));
      }
    }
  }
  return best;
}

double eval_H(const HamiltonianSpec& spec, const Vec3& y, const Vec3& p) { return spec(y, p); }

HamiltonianSpec clamp_quadratic(const HamiltonianSpec& spec, double c0, double k0) {
  if (!(k0 > 1.0)) throw std::invalid_argument("clamp requires K0 > 1");
  if (!(c0 > 0.0)) throw std::invalid_argument("clamp requires C0 > 0");
  if (spec.clamp()) throw std::invalid_argument("spec is already clamped");

  HamiltonianSpec out = spec;
  const double m = spec.sup_slope(c0);
  out.set_clamp(QuadraticClamp{c0, k0, m});

  auto fail = [&](double r) {
    std::ostringstream msg;
    msg << "K0 = " << k0 << " too small to bracket H near |p| = " << r;
    throw std::invalid_argument(msg.str());
  };

  // Inner region: the unmodified H must sit between the two parabolas.
  const int n = 2001;
  for (int i = 0; i < n; ++i) {
    const double r = c0 * i / (n - 1);
    const double hi = spec.sup_over_y(r);
    const double lo = spec.inf_over_y(r);
    if (hi > 0.5 * r * r + k0 + 1e-12 || lo < 0.5 * r * r - k0 - 1e-12) fail(r);
  }
  // Outer region: the linear branch peaks above |p|^2/2 at r = max(m, c0).
  const double r_star = std::max(m, c0);
  const double lin_star = spec.sup_over_y(c0) + m * (r_star - c0);
  if (lin_star > 0.5 * r_star * r_star + k0 + 1e-12) fail(r_star);
  return out;
}

LagrangianView::LagrangianView(const HamiltonianSpec& spec, double p_max)
    : spec_(std::make_shared<const HamiltonianSpec>(spec)) {
  closed_form_ = !spec.clamp() && spec.is_radial();
  if (p_max > 0.0) {
    p_max_ = p_max;
  } else if (spec.clamp()) {
    p_max_ = spec.clamp()->c0 + 2.0;
  } else {
    p_max_ = 10.0;
  }
}

double LagrangianView::operator()(const Vec3& y, const Vec3& q) const {
  const HamiltonianSpec& h = *spec_;
  const double s = norm(q);
  if (h.is_radial()) {
    const double c = h.coefficient()(y);
    if (!h.clamp()) {
      if (h.is_mechanical()) return 0.5 * s * s - c;
      const double k = *h.homogeneity_degree();
      if (k == 1.0) return s <= (1.0 / c) * (1.0 + 1e-12) ? 0.0 : kInfinity;
      const double r = std::pow(c * s / k, 1.0 / (k - 1.0));
      return r * s * (1.0 - 1.0 / k);
    }
    // Beyond 2|q| + sqrt(2 K0) + 1 the quadratic floor makes r|q| - H negative.
    const double hi = std::max(p_max_, 2.0 * s + std::sqrt(2.0 * h.clamp()->k0) + 1.0);
    return maximize_concave([&](double r) { return r * s - h.radial(c, r); }, hi);
  }

  // Generic evaluator: grid search on the p box followed by compass search.
  const int dim = h.dim();
  const int n = dim == 1 ? 2001 : dim == 2 ? 201 : 41;
  const UniformBox box = UniformBox::symmetric(dim, n, p_max_);
  Vec3 best_p{0, 0, 0};
  double best = -kInfinity;
  for (std::size_t i = 0; i < box.size(); ++i) {
    const Vec3 p = box.node(i);
    const double v = dot(p, q) - h(y, p);
    if (v > best) {
      best = v;
      best_p = p;
    }
  }
  double step = box.h;
  while (step > 1e-11) {
    bool moved = false;
    for (int i = 0; i < dim; ++i) {
      for (double sign : {1.0, -1.0}) {
        const Vec3 p = best_p + (sign * step) * unit(i);
        const double v = dot(p, q) - h(y, p);
        if (v > best) {
          best = v;
          best_p = p;
          moved = true;
        }
      }
    }
    if (!moved) step *= 0.5;
  }
  return best;
}

double eval_L(const LagrangianView& view, const Vec3& y, const Vec3& q) { return view(y, q); }

double hedlund_line_distance(const Vec3& y) {
  const double d1 = torus_dist2(y[1], y[2], 0.0, 0.0);
  const double d2 = torus_dist2(y[0], y[2], 0.0, 0.5);
  const double d3 = torus_dist2(y[0], y[1], 0.5, 0.5);
  return std::min({d1, d2, d3});
}

PeriodicFunction hedlund_metric(double delta, double tube_radius) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (!(tube_radius <= 0.2)) throw std::invalid_argument("tube radius above 0.2 makes tubes overlap");
  if (!(delta < tube_radius)) throw std::invalid_argument("delta must be below the tube radius");
  std::ostringstream name;
  name << "hedlund(delta=" << delta << ",r=" << tube_radius << ")";
  return PeriodicFunction(
      3, name.str(),
      [delta, tube_radius](const Vec3& y) {
        return delta + quintic_step(hedlund_line_distance(y) / tube_radius);
      },
      std::make_pair(delta, 1.0 + delta));
}

PeriodicField build_hedlund_metric(double delta, double tube_radius, int res) {
  const PeriodicFunction a = hedlund_metric(delta, tube_radius);
  return sample([&](const Vec3& y) { return a(y); }, Grid(3, res));
}

std::pair<double, double> line_offsets(int line, const Vec3& y) {
  switch (line) {
    case 1:
      return {y[1] - 0.5, y[2]};
    case 2:
      return {y[0], y[2] - 0.5};
    case 3:
      return {y[0] - 0.5, y[1]};
    default:
      throw std::invalid_argument("line index must be 1, 2 or 3");
  }
}

PeriodicFunction line_potential(double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  auto v = [beta](const Vec3& y) {
    double prod = 1.0;
    for (int i = 1; i <= 3; ++i) {
      const auto [u, w] = line_offsets(i, y);
      prod *= sin2(u) + sin2(w);
    }
    return -beta * prod;
  };
  std::ostringstream name;
  name << "lines(beta=" << beta << ")";
  auto bounds = sampled_bounds(3, v);
  bounds.second = 0.0;
  return PeriodicFunction(3, name.str(), v, bounds);
}

PeriodicField build_line_potential(double beta, int res) {
  const PeriodicFunction v = line_potential(beta);
  return sample([&](const Vec3& y) { return v(y); }, Grid(3, res));
}

ConjugateTable legendre_table(const UniformBox& p_grid, const std::vector<double>& hbar,
                              const UniformBox& q_grid) {
  if (p_grid.size() == 0 || hbar.empty() || q_grid.size() == 0) {
    throw std::invalid_argument("legendre_table needs non-empty grids");
  }
  if (hbar.size() != p_grid.size()) throw std::invalid_argument("table size mismatch");
  if (p_grid.dim != q_grid.dim) throw std::invalid_argument("p and q grids differ in dimension");
  for (double v : hbar) {
    if (!std::isfinite(v)) throw std::invalid_argument("Hbar must be finite on the p grid");
  }

  std::vector<Vec3> pnodes(p_grid.size());
  std::vector<char> pedge(p_grid.size());
  for (std::size_t j = 0; j < p_grid.size(); ++j) {
    pnodes[j] = p_grid.node(j);
    pedge[j] = p_grid.on_boundary(j) ? 1 : 0;
  }

  ConjugateTable out{q_grid, std::vector<double>(q_grid.size()),
                     std::vector<char>(q_grid.size(), 0)};
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    const Vec3 q = q_grid.node(i);
    double best = -kInfinity;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < pnodes.size(); ++j) {
      const double v = dot(pnodes[j], q) - hbar[j];
      if (v > best) {
        best = v;
        arg = j;
      }
    }
    if (pedge[arg]) {
      out.values[i] = kInfinity;
      out.boundary[i] = 1;
    } else {
      out.values[i] = best;
    }
  }
  return out;
}

std::vector<double> conjugate_back(const ConjugateTable& lbar, const UniformBox& p_grid) {
  std::vector<Vec3> qnodes;
  std::vector<double> qvals;
  for (std::size_t i = 0; i < lbar.q_grid.size(); ++i) {
    if (std::isfinite(lbar.values[i])) {
      qnodes.push_back(lbar.q_grid.node(i));
      qvals.push_back(lbar.values[i]);
    }
  }
  if (qnodes.empty()) throw std::invalid_argument("conjugate table has no finite values");
  std::vector<double> out(p_grid.size());
  for (std::size_t j = 0; j < p_grid.size(); ++j) {
    const Vec3 p = p_grid.node(j);
    double best = -kInfinity;
    for (std::size_t i = 0; i < qnodes.size(); ++i) {
      best = std::max(best, dot(p, qnodes[i]) - qvals[i]);
    }
    out[j] = best;
  }
  return out;
}

double EffectiveTable::hbar_at(const Vec3& p) const { return interp_box(p_grid, hbar, p); }

double EffectiveTable::lbar_at(const Vec3& q) const {
  const double tol = 1e-12 * (1.0 + std::abs(q_grid.lo));
  std::array<long, 3> base{0, 0, 0};
  std::array<double, 3> frac{0, 0, 0};
  for (int d = 0; d < q_grid.dim; ++d) {
    const std::size_t k = static_cast<std::size_t>(d);
    if (q[k] < q_grid.lo - tol || q[k] > q_grid.hi() + tol) return kInfinity;
    double s = std::clamp((q[k] - q_grid.lo) / q_grid.h, 0.0, q_grid.n - 1.0);
    double fl = std::min(std::floor(s), q_grid.n - 2.0);
    base[k] = static_cast<long>(fl);
    frac[k] = s - fl;
  }
  double acc = 0.0;
  for (int c = 0; c < (1 << q_grid.dim); ++c) {
    double w = 1.0;
    std::array<long, 3> idx = base;
    for (int d = 0; d < q_grid.dim; ++d) {
      const std::size_t k = static_cast<std::size_t>(d);
      if (c & (1 << d)) {
        w *= frac[k];
        idx[k] += 1;
      } else {
        w *= 1.0 - frac[k];
      }
    }
    if (w == 0.0) continue;
    const double v = lbar[q_grid.index(idx)];
    if (!std::isfinite(v)) return kInfinity;
    acc += w * v;
  }
  return acc;
}

}  // namespace hjlab
